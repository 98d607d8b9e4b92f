use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SpectralDecomposition;
use crate::error::{invalid, Error, Result};
use crate::graph::WeightedGraph;

/// Largest graph for which the full heat operator uses a dense spectrum.
pub const DENSE_CAP: usize = 2048;

#[derive(Clone, Debug)]
pub struct KrylovOptions {
    /// Relative accuracy of `e^{-tS} x`.
    pub tol: f64,
    /// Krylov dimension per substep.
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_dim: 80,
        }
    }
}

/// The heat semigroup acting on node functions.
pub enum HeatOperator<'a> {
    /// Exact `e^{-tΔ_n}` through the complete spectrum of `S`.
    Dense {
        graph: &'a WeightedGraph,
        values: Vec<f64>,
        /// Orthonormal eigenvectors of `S` as columns.
        vectors: DMatrix<f64>,
        sqrt_d: Vec<f64>,
    },
    /// `e^{-tΔ_n} u` by a Lanczos approximation of the exponential action.
    Krylov {
        graph: &'a WeightedGraph,
        opts: KrylovOptions,
    },
    /// Spectrally truncated `P_n`.
    Truncated { dec: &'a SpectralDecomposition },
}

impl<'a> HeatOperator<'a> {
    /// Full heat operator: dense up to `DENSE_CAP` nodes, Krylov above.
    pub fn full(graph: &'a WeightedGraph) -> Result<Self> {
        if graph.len() <= DENSE_CAP {
            Self::dense(graph)
        } else {
            Self::krylov(graph, KrylovOptions::default())
        }
    }

    pub fn dense(graph: &'a WeightedGraph) -> Result<Self> {
        if graph.len() > DENSE_CAP {
            return Err(invalid(format!(
                "dense heat operator is capped at n = {DENSE_CAP}, got {}",
                graph.len()
            )));
        }
        let s = graph.dense_symmetric()?;
        let eig = SymmetricEigen::new(s);
        Ok(Self::Dense {
            graph,
            values: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors,
            sqrt_d: graph.degrees().iter().map(|d| d.sqrt()).collect(),
        })
    }

    pub fn krylov(graph: &'a WeightedGraph, opts: KrylovOptions) -> Result<Self> {
        if let Some(i) = graph.first_isolated() {
            return Err(Error::IsolatedNode(i));
        }
        Ok(Self::Krylov { graph, opts })
    }

    pub fn truncated(dec: &'a SpectralDecomposition) -> Self {
        Self::Truncated { dec }
    }

    /// Whether this is the exact semigroup `e^{-tΔ_n}` (not truncated).
    pub fn is_full(&self) -> bool {
        !matches!(self, Self::Truncated { .. })
    }

    /// Degrees of the underlying graph when the operator is the full
    /// semigroup.
    pub fn full_degrees(&self) -> Option<&[f64]> {
        match self {
            Self::Dense { graph, .. } | Self::Krylov { graph, .. } => Some(graph.degrees()),
            Self::Truncated { .. } => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Dense { graph, .. } | Self::Krylov { graph, .. } => graph.len(),
            Self::Truncated { dec } => dec.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Dense { .. } => "full/dense".into(),
            Self::Krylov { .. } => "full/krylov".into(),
            Self::Truncated { dec } => format!("truncated(K={})", dec.k()),
        }
    }

    /// `S(t, u)` for the chosen variant.
    pub fn apply(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(invalid(format!("heat time must be positive, got {t}")));
        }
        if u.len() != self.len() {
            return Err(invalid(format!(
                "node function has length {}, graph has {} nodes",
                u.len(),
                self.len()
            )));
        }
        match self {
            Self::Dense {
                values,
                vectors,
                sqrt_d,
                ..
            } => {
                let y = DVector::from_iterator(u.len(), u.iter().zip(sqrt_d).map(|(a, s)| a * s));
                let mut c = vectors.tr_mul(&y);
                for (ci, l) in c.iter_mut().zip(values) {
                    *ci *= (-t * l).exp();
                }
                let z = vectors * c;
                Ok(z.iter().zip(sqrt_d).map(|(a, s)| a / s).collect())
            }
            Self::Krylov { graph, opts } => {
                let sqrt_d: Vec<f64> = graph.degrees().iter().map(|d| d.sqrt()).collect();
                let y: Vec<f64> = u.iter().zip(&sqrt_d).map(|(a, s)| a * s).collect();
                let apply = |x: &[f64]| graph.symmetric_apply(x).expect("degrees checked");
                let z = krylov_expm_apply(&apply, t, &y, opts)?;
                Ok(z.iter().zip(&sqrt_d).map(|(a, s)| a / s).collect())
            }
            Self::Truncated { dec } => Ok(dec.truncated_apply(t, u)),
        }
    }

    /// `max_x |S(t, 𝟙)(x) − 1|`
    pub fn mass_defect(&self, t: f64) -> Result<f64> {
        let ones = vec![1.0; self.len()];
        let s = self.apply(t, &ones)?;
        Ok(s.iter().fold(0.0, |m, v| m.max((v - 1.0).abs())))
    }
}

/// `e^{-tA} x` for symmetric positive semidefinite `A`, by Lanczos with full
/// reorthogonalisation. The interval is split into substeps whenever the
/// a-posteriori error estimate misses `opts.tol`.
pub fn krylov_expm_apply(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    t: f64,
    x: &[f64],
    opts: &KrylovOptions,
) -> Result<Vec<f64>> {
    let mut remaining = t;
    let mut step = t;
    let mut v = x.to_vec();
    let mut halvings = 0;
    while remaining > 0.0 {
        let tau = step.min(remaining);
        match krylov_step(apply, tau, &v, opts) {
            Some(next) => {
                v = next;
                remaining -= tau;
                if remaining < 1e-15 * t {
                    remaining = 0.0;
                }
            }
            None => {
                halvings += 1;
                if halvings > 40 {
                    return Err(Error::KrylovFailure(format!(
                        "no substep of t = {t} reached tolerance {:e}",
                        opts.tol
                    )));
                }
                step *= 0.5;
                log::debug!("Krylov exponential: reducing substep to {step:e}");
            }
        }
    }
    if halvings > 0 {
        log::info!("Krylov exponential used substeps of {step:e} for t = {t:e}");
    }
    Ok(v)
}

fn krylov_step(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    tau: f64,
    x: &[f64],
    opts: &KrylovOptions,
) -> Option<Vec<f64>> {
    let beta0 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return Some(vec![0.0; x.len()]);
    }
    let mut q: Vec<Vec<f64>> = vec![x.iter().map(|a| a / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let m_max = opts.max_dim.min(x.len());
    loop {
        let j = q.len() - 1;
        let mut w = apply(&q[j]);
        let a: f64 = w.iter().zip(&q[j]).map(|(p, r)| p * r).sum();
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c: f64 = w.iter().zip(qi).map(|(p, r)| p * r).sum();
                w.iter_mut().zip(qi).for_each(|(p, r)| *p -= c * r);
            }
        }
        let b = w.iter().map(|p| p * p).sum::<f64>().sqrt();
        let m = alpha.len();
        let (coef, last) = tridiag_exp_first_column(&alpha, &beta, tau);
        // error estimate: β_m |e_mᵀ e^{-τT} e_1| (happy breakdown when β ≈ 0)
        let anorm = alpha.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
        let breakdown = b <= 1e-13 * anorm.max(1.0);
        let estimate = b * last.abs();
        let size = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
        if breakdown || estimate <= opts.tol * size || m == x.len() {
            let mut out = vec![0.0; x.len()];
            for (qi, c) in q.iter().zip(&coef) {
                out.iter_mut().zip(qi).for_each(|(o, r)| *o += beta0 * c * r);
            }
            return Some(out);
        }
        if m >= m_max {
            return None;
        }
        beta.push(b);
        q.push(w.into_iter().map(|p| p / b).collect());
    }
}

/// First column of `e^{-τT}` for the symmetric tridiagonal `T`, and its last
/// entry.
fn tridiag_exp_first_column(alpha: &[f64], beta: &[f64], tau: f64) -> (Vec<f64>, f64) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut col = vec![0.0; m];
    for k in 0..m {
        let w = (-tau * eig.eigenvalues[k]).exp() * eig.eigenvectors[(0, k)];
        for (i, c) in col.iter_mut().enumerate() {
            *c += eig.eigenvectors[(i, k)] * w;
        }
    }
    let last = col[m - 1];
    (col, last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KernelProfile;
    use crate::manifold::{sample_points, DensitySpec, ManifoldSpec};

    fn graph(n: usize, eps: f64) -> WeightedGraph {
        let m = ManifoldSpec::unit_torus();
        WeightedGraph::build(
            sample_points(m, DensitySpec::uniform(m), n, 5).unwrap(),
            eps,
            KernelProfile::Indicator,
        )
        .unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let g = graph(200, 0.2);
        let dense = HeatOperator::dense(&g).unwrap();
        assert!(dense.mass_defect(0.05).unwrap() <= 1e-12);
        let kry = HeatOperator::krylov(&g, KrylovOptions::default()).unwrap();
        assert!(kry.mass_defect(0.05).unwrap() <= 1e-10);
    }

    #[test]
    fn krylov_matches_dense() {
        let g = graph(300, 0.15);
        let dense = HeatOperator::dense(&g).unwrap();
        let kry = HeatOperator::krylov(&g, KrylovOptions::default()).unwrap();
        let u: Vec<f64> = (0..300).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        for t in [1e-3, 0.02, 0.3] {
            let a = dense.apply(t, &u).unwrap();
            let b = kry.apply(t, &u).unwrap();
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(err <= 1e-9 * scale, "t={t}: {err}");
        }
    }

    #[test]
    fn small_krylov_dimension_forces_substeps() {
        let g = graph(300, 0.15);
        let dense = HeatOperator::dense(&g).unwrap();
        let kry = HeatOperator::krylov(&g, KrylovOptions { tol: 1e-11, max_dim: 12 }).unwrap();
        let u: Vec<f64> = (0..300).map(|i| (i % 2) as f64).collect();
        let a = dense.apply(0.05, &u).unwrap();
        let b = kry.apply(0.05, &u).unwrap();
        let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn rejects_nonpositive_time() {
        let g = graph(50, 0.3);
        let h = HeatOperator::dense(&g).unwrap();
        assert!(h.apply(0.0, &[0.0; 50]).is_err());
    }
}
