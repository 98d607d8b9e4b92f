//! Weighted ε-graphs on point clouds and their random-walk Laplacian
//! `Δ_n = ε⁻²(I − D⁻¹W/n)`, self-adjoint for `⟨u,v⟩_V = (1/n) Σ d_i u_i v_i`.

mod io;
mod kernel;
mod neighbors;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::manifold::PointCloud;

pub use io::{write_graph, GraphMetadata};
pub use kernel::{kernel_constants, KernelConstants, KernelProfile};

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    pub cloud: PointCloud,
    pub epsilon: f64,
    pub kernel: KernelProfile,
    /// Upper-triangle CSR (`j > i` only); the lower half is implicit.
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    components: usize,
}

impl WeightedGraph {
    /// `w_ij = ε⁻ᵏ η(dist(x_i, x_j)/ε)` with `k` the intrinsic dimension.
    pub fn build(cloud: PointCloud, epsilon: f64, kernel: KernelProfile) -> Result<Self> {
        let limit = cloud.manifold.injectivity_scale();
        if !(epsilon > 0.0 && epsilon < limit) {
            return Err(invalid(format!(
                "ε must lie in (0, {limit}) for {}, got {epsilon}",
                cloud.manifold.name()
            )));
        }
        let k = cloud.manifold.intrinsic_dim() as i32;
        let scale = epsilon.powi(-k);
        let rows = neighbors::upper_neighbors(&cloud, epsilon);
        let triplets = rows.into_iter().enumerate().flat_map(|(i, row)| {
            row.into_iter()
                .map(move |(j, d)| (i, j as usize, scale * kernel.eval(d / epsilon)))
        });
        Self::from_upper_triplets(cloud, epsilon, kernel, triplets)
    }

    /// Builds a graph from explicit upper-triangle weights `(i, j, w)` with
    /// `i < j`, given in row-major order. Zero weights are dropped.
    pub fn from_upper_triplets(
        cloud: PointCloud,
        epsilon: f64,
        kernel: KernelProfile,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = cloud.len();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut degree_sums = vec![0.0f64; n];
        let mut row = 0usize;
        for (i, j, w) in triplets {
            if !(i < j && j < n) {
                return Err(invalid(format!("edge ({i}, {j}) is not strictly upper-triangular")));
            }
            if i < row || (i == row && cols.len() > row_ptr[row] && j as u32 <= *cols.last().unwrap()) {
                return Err(invalid("edges must be given in row-major order with increasing columns"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("edge ({i}, {j}) has invalid weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            while row < i {
                row += 1;
                row_ptr[row] = cols.len();
            }
            cols.push(j as u32);
            weights.push(w);
            degree_sums[i] += w;
            degree_sums[j] += w;
        }
        while row < n {
            row += 1;
            row_ptr[row] = cols.len();
        }
        let inv_n = 1.0 / n as f64;
        let degrees = degree_sums.into_iter().map(|s| s * inv_n).collect();
        let mut g = Self {
            cloud,
            epsilon,
            kernel,
            row_ptr,
            cols,
            weights,
            degrees,
            components: 0,
        };
        g.components = g.count_components();
        if g.components > 1 {
            log::warn!(
                "graph with n = {n}, ε = {epsilon} has {} connected components",
                g.components
            );
        }
        Ok(g)
    }

    fn count_components(&self) -> usize {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.upper_entries() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn edge_count(&self) -> usize {
        self.cols.len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Stored `(i, j, w_ij)` with `i < j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |i| {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            self.cols[r.clone()]
                .iter()
                .zip(&self.weights[r])
                .map(move |(&j, &w)| (i, j as usize, w))
        })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b {
            return 0.0;
        }
        let r = self.row_ptr[a]..self.row_ptr[a + 1];
        match self.cols[r.clone()].binary_search(&(b as u32)) {
            Ok(p) => self.weights[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// `W u` with the implicit symmetric mirror.
    pub fn weight_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for i in 0..self.len() {
            let ui = u[i];
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                let w = self.weights[p];
                acc += w * u[j];
                y[j] += w * ui;
            }
            y[i] += acc;
        }
        y
    }

    /// `⟨u, v⟩_V = (1/n) Σ d_i u_i v_i`
    pub fn inner_product(&self, u: &[f64], v: &[f64]) -> f64 {
        let s: f64 = self
            .degrees
            .iter()
            .zip(u)
            .zip(v)
            .map(|((d, a), b)| d * a * b)
            .sum();
        s / self.len() as f64
    }

    pub fn first_isolated(&self) -> Option<usize> {
        self.degrees.iter().position(|&d| d <= 0.0)
    }

    fn require_positive_degrees(&self) -> Result<()> {
        match self.first_isolated() {
            Some(i) => Err(Error::IsolatedNode(i)),
            None => Ok(()),
        }
    }

    /// `(Δ_n u)_i = ε⁻² (u_i − (1/(n d_i)) Σ_j w_ij u_j)`
    pub fn laplacian_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.require_positive_degrees()?;
        let wu = self.weight_apply(u);
        let n = self.len() as f64;
        let e2 = 1.0 / (self.epsilon * self.epsilon);
        Ok(u.iter()
            .zip(&wu)
            .zip(&self.degrees)
            .map(|((ui, wi), d)| e2 * (ui - wi / (n * d)))
            .collect())
    }

    /// `S x` for the symmetric similarity form `S = D^{1/2} Δ_n D^{-1/2}
    /// = ε⁻² (I − D^{-1/2} W D^{-1/2} / n)`.
    pub fn symmetric_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require_positive_degrees()?;
        let n = self.len() as f64;
        let scaled: Vec<f64> = x.iter().zip(&self.degrees).map(|(a, d)| a / d.sqrt()).collect();
        let wu = self.weight_apply(&scaled);
        let e2 = 1.0 / (self.epsilon * self.epsilon);
        Ok(x.iter()
            .zip(&wu)
            .zip(&self.degrees)
            .map(|((xi, wi), d)| e2 * (xi - wi / (n * d.sqrt())))
            .collect())
    }

    pub fn dense_weights(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut w = DMatrix::zeros(n, n);
        for (i, j, v) in self.upper_entries() {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        w
    }

    /// Dense `Δ_n`; small graphs only.
    pub fn dense_laplacian(&self) -> Result<DMatrix<f64>> {
        self.require_positive_degrees()?;
        let n = self.len();
        let e2 = 1.0 / (self.epsilon * self.epsilon);
        let mut l = self.dense_weights();
        for i in 0..n {
            let s = -e2 / (n as f64 * self.degrees[i]);
            for j in 0..n {
                l[(i, j)] *= s;
            }
            l[(i, i)] += e2;
        }
        Ok(l)
    }

    /// Dense symmetric form `S`; small graphs only.
    pub fn dense_symmetric(&self) -> Result<DMatrix<f64>> {
        self.require_positive_degrees()?;
        let n = self.len();
        let e2 = 1.0 / (self.epsilon * self.epsilon);
        let mut s = self.dense_weights();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= -e2 / (n as f64 * (self.degrees[i] * self.degrees[j]).sqrt());
            }
            s[(i, i)] += e2;
        }
        Ok(s)
    }

    /// SHA-256 over the point coordinates, the manifold, ε and the kernel.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.cloud.manifold.name().as_bytes());
        if let Some(side) = self.cloud.manifold.side() {
            h.update(side.to_le_bytes());
        }
        h.update((self.len() as u64).to_le_bytes());
        h.update(self.cloud.coord_bytes());
        h.update(self.epsilon.to_le_bytes());
        h.update(self.kernel.name().as_bytes());
        h.finalize().into()
    }
}
