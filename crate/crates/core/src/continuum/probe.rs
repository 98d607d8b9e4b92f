//! Numerical check of the one-step consistency expansion of thresholding:
//! `(½ − (e^{-κhΔ_ξ} 1_{ψ≥0})(z)) / √(κh)` against the level-set speed at `z`.

use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::Path;

use super::grid::{crank_nicolson_heat, CrankNicolson, GridField};
use crate::error::{invalid, Error, Result};
use crate::manifold::{periodic_heat_1d, DensitySpec, ManifoldSpec};

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> [f64; 2] + Send + Sync>;
type HessFn = Box<dyn Fn(&[f64]) -> [[f64; 2]; 2] + Send + Sync>;

/// Smooth level-set function on the torus with analytic derivatives.
pub struct LevelSet {
    value: ScalarFn,
    gradient: GradFn,
    hessian: HessFn,
    /// `∂_t ψ` at the probe point.
    pub time_derivative: f64,
}

impl LevelSet {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> [f64; 2] + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
            time_derivative: 0.0,
        }
    }

    /// `ψ = r₀ − |x − c|`
    pub fn circle(center: [f64; 2], r0: f64) -> Self {
        let rel = move |x: &[f64]| [x[0] - center[0], x[1] - center[1]];
        Self::new(
            move |x| {
                let d = rel(x);
                r0 - d[0].hypot(d[1])
            },
            move |x| {
                let d = rel(x);
                let r = d[0].hypot(d[1]);
                [-d[0] / r, -d[1] / r]
            },
            move |x| {
                let d = rel(x);
                let r = d[0].hypot(d[1]);
                let r3 = r * r * r;
                [
                    [-(d[1] * d[1]) / r3, d[0] * d[1] / r3],
                    [d[0] * d[1] / r3, -(d[0] * d[0]) / r3],
                ]
            },
        )
    }

    /// `ψ = a − x_axis`
    pub fn half_plane(axis: usize, a: f64) -> Self {
        let mut g = [0.0; 2];
        g[axis] = -1.0;
        Self::new(move |x| a - x[axis], move |_| g, |_| [[0.0; 2]; 2])
    }

    pub fn with_time_derivative(mut self, dt: f64) -> Self {
        self.time_derivative = dt;
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        (self.gradient)(x)
    }

    pub fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        (self.hessian)(x)
    }

    /// Cell coverage of `{ψ ≥ 0}` from the first-order distance `ψ/|Dψ|`.
    fn coverage(&self, y: &[f64], cell: f64) -> f64 {
        let g = self.gradient(y);
        let norm = g[0].hypot(g[1]).max(1e-300);
        (0.5 + self.value(y) / (norm * cell)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    /// Quadrature cells per side.
    pub grid_n: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { grid_n: 1024 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
}

/// `(1/(2√π|Dψ|)) (∂_tψ − ⟨I − Dψ⊗Dψ/|Dψ|², D²ψ⟩ − (∇ξ/ξ)·Dψ)` at `z`.
pub fn probe_rhs(psi: &LevelSet, z: [f64; 2], density: &DensitySpec) -> f64 {
    let p = psi.gradient(&z);
    let hs = psi.hessian(&z);
    let p2 = p[0] * p[0] + p[1] * p[1];
    let mut curv = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let proj = if a == b { 1.0 } else { 0.0 } - p[a] * p[b] / p2;
            curv += proj * hs[a][b];
        }
    }
    let g = density.grad_log_xi(&z);
    let drift = g[0] * p[0] + g[1] * p[1];
    (psi.time_derivative - curv - drift) / (2.0 * PI.sqrt() * p2.sqrt())
}

/// Heat of `1_{ψ≥0}` at `z`, uniform density: midpoint quadrature of the
/// exact periodic kernel over a window around `z`.
fn uniform_heat_at(psi: &LevelSet, z: [f64; 2], t: f64, side: f64, cell: f64) -> f64 {
    let reach = (12.0 * t.sqrt()).min(0.5 * side);
    let m = (reach / cell).ceil() as i64;
    let offsets: Vec<f64> = (-m..m).map(|i| (i as f64 + 0.5) * cell).collect();
    let g: Vec<f64> = offsets.iter().map(|&o| periodic_heat_1d(t, o, side) * cell).collect();
    offsets
        .par_iter()
        .zip(&g)
        .map(|(&ox, &gx)| {
            let mut s = 0.0;
            for (&oy, &gy) in offsets.iter().zip(&g) {
                s += gy * psi.coverage(&[z[0] + ox, z[1] + oy], cell);
            }
            gx * s
        })
        .sum()
}

/// Heat of `1_{ψ≥0}` at `z` by Crank–Nicolson on the full grid.
fn grid_heat_at(psi: &LevelSet, z: [f64; 2], t: f64, density: &DensitySpec, n: usize) -> Result<f64> {
    let side = density.manifold.side().expect("torus checked by caller");
    let cell = side / n as f64;
    let f = GridField::from_fn(side, n, |y| psi.coverage(y, cell))?;
    let u = crank_nicolson_heat(&f, t, density, &CrankNicolson::default())?;
    Ok(u.bilinear(&z))
}

/// Evaluates the consistency expansion at `z ∈ {ψ = 0}` for each `h`.
pub fn consistency_probe(
    psi: &LevelSet,
    z: [f64; 2],
    kappa: f64,
    hs: &[f64],
    density: &DensitySpec,
    opts: &ProbeOptions,
) -> Result<Vec<ProbeRow>> {
    let side = match density.manifold {
        ManifoldSpec::FlatTorus { side } => side,
        ManifoldSpec::Sphere => return Err(Error::Unsupported("the probe runs on the torus".into())),
    };
    if !(kappa > 0.0) || hs.is_empty() || hs.iter().any(|&h| !(h > 0.0)) {
        return Err(invalid("need κ > 0 and a non-empty list of positive h"));
    }
    let p = psi.gradient(&z);
    if !(p[0].hypot(p[1]) > 1e-12) {
        return Err(invalid("Dψ vanishes at the probe point"));
    }
    if psi.value(&z).abs() > 1e-9 * side {
        return Err(invalid(format!("probe point is not on {{ψ = 0}} (ψ = {:e})", psi.value(&z))));
    }
    if !opts.grid_n.is_power_of_two() {
        return Err(invalid("probe grid size must be a power of two"));
    }
    let cell = side / opts.grid_n as f64;
    let h_min = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = 0.25 * (kappa * h_min).sqrt();
    if cell > limit {
        return Err(Error::GridTooCoarse {
            cell,
            limit,
            suggested_n: ((side / limit).ceil() as usize).next_power_of_two(),
        });
    }
    let rhs = probe_rhs(psi, z, density);
    hs.par_iter()
        .map(|&h| {
            let t = kappa * h;
            let heat = if density.is_uniform() {
                uniform_heat_at(psi, z, t, side, cell)
            } else {
                grid_heat_at(psi, z, t, density, opts.grid_n)?
            };
            let lhs = (0.5 - heat) / t.sqrt();
            Ok(ProbeRow {
                h,
                lhs,
                rhs,
                abs_gap: (lhs - rhs).abs(),
            })
        })
        .collect()
}

/// Writes `h,lhs,rhs,abs_gap`.
pub fn write_probe_csv(rows: &[ProbeRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["h", "lhs", "rhs", "abs_gap"])?;
    for r in rows {
        w.write_record([r.h, r.lhs, r.rhs, r.abs_gap].map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}
