//! Partial spectra of the random-walk Laplacian and the heat operators built
//! from them.

mod cache;
mod heat;
mod lanczos;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::graph::WeightedGraph;

pub use cache::{load_spectrum, save_spectrum, CACHE_MAGIC};
pub use heat::{krylov_expm_apply, HeatOperator, KrylovOptions, DENSE_CAP};

/// Default relative residual target of the eigensolver.
pub const DEFAULT_TOL: f64 = 1e-10;

/// First `K` eigenpairs of `Δ_n`, eigenvectors orthonormal in `⟨·,·⟩_V`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Node-major: entry `(node, l)` at `node * K + l`.
    eigenvectors: Vec<f64>,
    /// Degrees of the graph the pairs belong to.
    pub degrees: Vec<f64>,
    /// `‖Δ v − λ v‖_V` per pair.
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub graph_hash: [u8; 32],
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub block: usize,
    /// Krylov dimension cap; `None` picks `10 K + 400`.
    pub max_dim: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            block: 8,
            max_dim: None,
            seed: 0x5eed,
        }
    }
}

/// Smallest `K` eigenpairs of `Δ_n`, computed on `S = D^{1/2} Δ_n D^{-1/2}`
/// and mapped back by `v = √n D^{-1/2} q`.
pub fn partial_eigendecomposition(
    graph: &WeightedGraph,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectralDecomposition> {
    let n = graph.len();
    if !(1..=n).contains(&k) {
        return Err(invalid(format!("need 1 <= K <= n = {n}, got K = {k}")));
    }
    if let Some(i) = graph.first_isolated() {
        return Err(crate::Error::IsolatedNode(i));
    }
    if !graph.is_connected() {
        log::warn!(
            "graph has {} components; the zero eigenvalue is repeated",
            graph.components()
        );
    }
    let sqrt_d: Vec<f64> = graph.degrees().iter().map(|d| d.sqrt()).collect();
    let e2 = 1.0 / (graph.epsilon * graph.epsilon);
    let apply = |x: &[f64]| graph.symmetric_apply(x).expect("degrees checked above");
    let tol = opts.tol;
    let target = |theta_k: f64| tol * (theta_k.abs() + e2);
    let lopts = lanczos::LanczosOptions {
        block: opts.block,
        max_dim: opts.max_dim.unwrap_or(10 * k + 400),
        seed: opts.seed,
    };
    let ritz = lanczos::smallest_eigenpairs(n, k, &apply, Some(&sqrt_d), &target, &lopts)?;
    log::debug!("Lanczos converged with Krylov dimension {}", ritz.iterations);

    let residuals: Vec<f64> = ritz
        .vectors
        .par_iter()
        .zip(&ritz.values)
        .map(|(q, &lam)| {
            let sq = apply(q);
            sq.iter()
                .zip(q)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let scale = (n as f64).sqrt();
    let mut eigenvectors = vec![0.0; n * k];
    for (l, q) in ritz.vectors.iter().enumerate() {
        // sign convention: largest-magnitude entry positive
        let pivot = q
            .iter()
            .cloned()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let mut v: Vec<f64> = q
            .iter()
            .zip(&sqrt_d)
            .map(|(x, s)| sign * scale * x / s)
            .collect();
        let nv = graph.inner_product(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        for (node, x) in v.into_iter().enumerate() {
            eigenvectors[node * k + l] = x;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: ritz.values,
        eigenvectors,
        degrees: graph.degrees().to_vec(),
        residuals,
        tol,
        graph_hash: graph.content_hash(),
    })
}

impl SpectralDecomposition {
    pub(crate) fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: Vec<f64>,
        degrees: Vec<f64>,
        residuals: Vec<f64>,
        tol: f64,
        graph_hash: [u8; 32],
    ) -> Result<Self> {
        let k = eigenvalues.len();
        let n = degrees.len();
        if eigenvectors.len() != n * k || residuals.len() != k {
            return Err(invalid("spectral decomposition arrays have inconsistent shapes"));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            degrees,
            residuals,
            tol,
            graph_hash,
        })
    }

    /// Number of eigenpairs `K`.
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of nodes `n`.
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn eigenvectors_raw(&self) -> &[f64] {
        &self.eigenvectors
    }

    /// `v^l(node)`
    pub fn value(&self, node: usize, l: usize) -> f64 {
        self.eigenvectors[node * self.k() + l]
    }

    /// `(v^1(node), …, v^K(node))`
    pub fn row(&self, node: usize) -> &[f64] {
        let k = self.k();
        &self.eigenvectors[node * k..(node + 1) * k]
    }

    pub fn vector(&self, l: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.value(i, l)).collect()
    }

    /// Keeps the first `k` pairs.
    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.k());
        let old = self.k();
        let mut eigenvectors = Vec::with_capacity(self.n() * k);
        for i in 0..self.n() {
            eigenvectors.extend_from_slice(&self.eigenvectors[i * old..i * old + k]);
        }
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenvectors,
            degrees: self.degrees.clone(),
            residuals: self.residuals[..k].to_vec(),
            tol: self.tol,
            graph_hash: self.graph_hash,
        }
    }

    /// `⟨v^l, u⟩_V` for all `l`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        let k = self.k();
        let n = self.n();
        let mut c = vec![0.0; k];
        for i in 0..n {
            let w = self.degrees[i] * u[i];
            if w == 0.0 {
                continue;
            }
            for (cl, v) in c.iter_mut().zip(self.row(i)) {
                *cl += w * v;
            }
        }
        c.iter_mut().for_each(|x| *x /= n as f64);
        c
    }

    /// `P_n(t, u) = Σ_l e^{-tλ_l} v^l ⟨v^l, u⟩_V`
    pub fn truncated_apply(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let damped: Vec<f64> = self
            .project(u)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * (-t * l).exp())
            .collect();
        (0..self.n())
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(&damped).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `H^K(t, x_i, x_j) = Σ_{l≤K} e^{-tλ_l} v^l(x_i) v^l(x_j) d(x_j)/n`
    pub fn truncated_kernel_entry(&self, t: f64, i: usize, j: usize) -> f64 {
        let s: f64 = self
            .row(i)
            .iter()
            .zip(self.row(j))
            .zip(&self.eigenvalues)
            .map(|((a, b), l)| (-t * l).exp() * a * b)
            .sum();
        s * self.degrees[j] / self.n() as f64
    }

    /// Kernel row `j ↦ H^K(t, x_i, x_j)`.
    pub fn truncated_kernel_row(&self, t: f64, i: usize) -> Vec<f64> {
        let a: Vec<f64> = self
            .row(i)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(v, l)| (-t * l).exp() * v)
            .collect();
        let n = self.n() as f64;
        (0..self.n())
            .into_par_iter()
            .map(|j| {
                let s: f64 = self.row(j).iter().zip(&a).map(|(x, y)| x * y).sum();
                s * self.degrees[j] / n
            })
            .collect()
    }

    /// Largest deviation of the Gram matrix `⟨v^l, v^m⟩_V` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.k();
        let n = self.n();
        let mut g = vec![0.0; k * k];
        for i in 0..n {
            let r = self.row(i);
            let d = self.degrees[i];
            for a in 0..k {
                let da = d * r[a];
                for b in 0..k {
                    g[a * k + b] += da * r[b];
                }
            }
        }
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g[a * k + b] / n as f64 - want).abs());
            }
        }
        worst
    }
}
