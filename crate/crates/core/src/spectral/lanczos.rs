//! Band Lanczos with full reorthogonalisation for the smallest eigenpairs of
//! a symmetric operator.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::util::seeded_rng;

pub(crate) struct LanczosOptions {
    pub block: usize,
    pub max_dim: usize,
    pub seed: u64,
}

pub(crate) struct RitzPairs {
    pub values: Vec<f64>,
    /// Column-major, `count` vectors of length `n`.
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram–Schmidt against `basis`; returns the summed
/// projection coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.par_iter().map(|q| dot(q, w)).collect();
        w.par_chunks_mut(4096).enumerate().for_each(|(chunk, wc)| {
            let off = chunk * 4096;
            for (q, ci) in basis.iter().zip(&c) {
                let qc = &q[off..off + wc.len()];
                for (x, y) in wc.iter_mut().zip(qc) {
                    *x -= ci * y;
                }
            }
        });
        for (t, ci) in total.iter_mut().zip(&c) {
            *t += ci;
        }
    }
    total
}

/// Smallest `count` eigenpairs of the symmetric operator `apply` on `R^n`.
///
/// `start` seeds the first Krylov direction (a known null vector speeds up
/// the zero mode); the rest of the starting block is random. `target(θ_K)`
/// returns the residual norm each Ritz pair must reach.
pub(crate) fn smallest_eigenpairs(
    n: usize,
    count: usize,
    apply: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    start: Option<&[f64]>,
    target: &dyn Fn(f64) -> f64,
    opts: &LanczosOptions,
) -> Result<RitzPairs> {
    let max_dim = opts.max_dim.clamp(count.min(n), n);
    let block = opts.block.clamp(1, max_dim);
    let mut rng = seeded_rng(opts.seed);
    let mut random_unit = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            orthogonalize(basis, &mut v);
            let r = norm(&v);
            if r > 1e-8 {
                v.iter_mut().for_each(|x| *x /= r);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + block);
    if let Some(s) = start {
        let r = norm(s);
        if r > 0.0 {
            basis.push(s.iter().map(|x| x / r).collect());
        }
    }
    while basis.len() < block {
        match random_unit(&basis) {
            Some(v) => basis.push(v),
            None => break,
        }
    }

    // columns[p][i] = q_iᵀ A q_p for the processed vectors p
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut next_check = (count + block).min(max_dim);
    let mut worst = f64::INFINITY;
    let mut last_residuals = Vec::new();

    let mut p = 0usize;
    while p < basis.len() && p < max_dim {
        let mut w = apply(&basis[p]);
        let scale = norm(&w);
        let coeffs = orthogonalize(&basis, &mut w);
        let mut col = coeffs;
        let r = norm(&w);
        if basis.len() < n {
            if r > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                w.iter_mut().for_each(|x| *x /= r);
                basis.push(w);
                col.push(r);
            } else if let Some(v) = random_unit(&basis) {
                // invariant subspace found: the new direction is uncoupled
                basis.push(v);
                col.push(0.0);
            }
        }
        columns.push(col);
        p += 1;

        let exhausted = p == basis.len() || p == max_dim;
        if p >= next_check || exhausted {
            next_check = (p + block.max(p / 5)).min(max_dim);
            let m = p;
            let mut t = DMatrix::<f64>::zeros(m, m);
            for (j, col) in columns.iter().enumerate() {
                for i in 0..m.min(col.len()) {
                    t[(i, j)] = col[i];
                }
            }
            let t = (&t + t.transpose()) * 0.5;
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let want = count.min(m);
            if want < count && !exhausted {
                continue;
            }
            // residual of Ritz pair: ‖T[p.., ..p] y‖
            let tail = basis.len() - m;
            let theta_k = eig.eigenvalues[order[want - 1]];
            let tol = target(theta_k);
            let residuals: Vec<f64> = order[..want]
                .iter()
                .map(|&c| {
                    let y = eig.eigenvectors.column(c);
                    let mut s = 0.0;
                    for extra in 0..tail {
                        let row = m + extra;
                        let mut acc = 0.0;
                        for (j, col) in columns.iter().enumerate() {
                            if row < col.len() {
                                acc += col[row] * y[j];
                            }
                        }
                        s += acc * acc;
                    }
                    s.sqrt()
                })
                .collect();
            worst = residuals.iter().cloned().fold(0.0, f64::max);
            last_residuals = residuals;
            if want == count && worst <= tol {
                let vectors: Vec<Vec<f64>> = order[..want]
                    .par_iter()
                    .map(|&c| {
                        let y = eig.eigenvectors.column(c);
                        let mut x = vec![0.0; n];
                        for (j, q) in basis[..m].iter().enumerate() {
                            let yj = y[j];
                            for (xi, qi) in x.iter_mut().zip(q) {
                                *xi += yj * qi;
                            }
                        }
                        x
                    })
                    .collect();
                let values = order[..want].iter().map(|&c| eig.eigenvalues[c]).collect();
                return Ok(RitzPairs {
                    values,
                    vectors,
                    iterations: m,
                });
            }
            if exhausted {
                return Err(Error::NonConvergence {
                    iterations: m,
                    worst_residual: worst,
                    target: tol,
                    residuals: last_residuals,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: p,
        worst_residual: worst,
        target: f64::NAN,
        residuals: last_residuals,
    })
}
