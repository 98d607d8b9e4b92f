//! Closed-form spectra of the flat torus and the round sphere.
//!
//! Eigenfunctions are normalised in `L²(ξ dVol)` with `ξ = ρ²` and `ρ` the
//! uniform probability density, so that the heat kernel
//! `H(t,x,y) = Σ e^{-tλ_l} f_l(x) f_l(y)` reproduces `e^{-tΔ}` against the
//! measure `ξ dVol`.

use std::f64::consts::PI;

use super::{DensitySpec, ManifoldSpec};
use crate::error::{invalid, Error, Result};
use crate::util::{gauss_legendre, legendre_table};

/// Spectral tail cutoff: modes with `e^{-tλ} ≤ HEAT_TRUNCATION` are dropped.
pub const HEAT_TRUNCATION: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMode {
    TorusConstant,
    TorusCos { m: [i32; 2] },
    TorusSin { m: [i32; 2] },
    /// Real spherical harmonic; `m < 0` selects the sine branch.
    Sphere { l: usize, m: i32 },
}

#[derive(Clone, Debug)]
pub struct ContinuumEigensystem {
    pub manifold: ManifoldSpec,
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<EigenMode>,
    /// Smallest eigenvalue not contained in the system.
    pub next_eigenvalue: f64,
    /// `1/√ξ` for the uniform density.
    inv_sqrt_xi: f64,
}

/// Coefficients `⟨f, f_l⟩_{L²(ξ)}` of a function in a given eigensystem.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coefficients: Vec<f64>,
}

/// Quadrature rule against `dVol`, exact for the band-limited modes used here.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Midpoint rule on an `n × n` torus grid, or Gauss–Legendre × uniform
    /// longitude on the sphere with `n` colatitude nodes.
    pub fn new(manifold: ManifoldSpec, n: usize) -> Self {
        match manifold {
            ManifoldSpec::FlatTorus { side } => {
                let h = side / n as f64;
                let mut nodes = Vec::with_capacity(2 * n * n);
                for i in 0..n {
                    for j in 0..n {
                        nodes.push((i as f64 + 0.5) * h);
                        nodes.push((j as f64 + 0.5) * h);
                    }
                }
                Self {
                    dim: 2,
                    nodes,
                    weights: vec![h * h; n * n],
                }
            }
            ManifoldSpec::Sphere => {
                let (mu, w) = gauss_legendre(n);
                let nphi = 2 * n;
                let dphi = 2.0 * PI / nphi as f64;
                let mut nodes = Vec::with_capacity(3 * n * nphi);
                let mut weights = Vec::with_capacity(n * nphi);
                for (m, wm) in mu.iter().zip(&w) {
                    let s = (1.0 - m * m).sqrt();
                    for k in 0..nphi {
                        let phi = k as f64 * dphi;
                        nodes.extend_from_slice(&[s * phi.cos(), s * phi.sin(), *m]);
                        weights.push(wm * dphi);
                    }
                }
                Self {
                    dim: 3,
                    nodes,
                    weights,
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

/// First `count` eigenpairs of the Laplace–Beltrami operator, sorted
/// ascending with multiplicity. Only the uniform density has closed forms.
pub fn continuum_eigensystem(
    manifold: ManifoldSpec,
    density: &DensitySpec,
    count: usize,
) -> Result<ContinuumEigensystem> {
    if !density.is_uniform() {
        return Err(Error::Unsupported(
            "closed-form eigensystem needs the uniform density; use the grid oracle".into(),
        ));
    }
    if count == 0 {
        return Err(invalid("eigensystem needs at least one mode"));
    }
    let inv_sqrt_xi = manifold.volume();
    let (mut pairs, next) = match manifold {
        ManifoldSpec::FlatTorus { side } => torus_modes(side, count),
        ManifoldSpec::Sphere => sphere_modes(count),
    };
    pairs.truncate(count);
    let (eigenvalues, modes) = pairs.into_iter().unzip();
    Ok(ContinuumEigensystem {
        manifold,
        eigenvalues,
        modes,
        next_eigenvalue: next,
        inv_sqrt_xi,
    })
}

fn torus_modes(side: f64, count: usize) -> (Vec<(f64, EigenMode)>, f64) {
    let k2 = (2.0 * PI / side).powi(2);
    let mut r: i32 = 1;
    loop {
        let mut out: Vec<(i32, EigenMode)> = vec![(0, EigenMode::TorusConstant)];
        for m0 in 0..=r {
            for m1 in -r..=r {
                if m0 == 0 && m1 <= 0 {
                    continue;
                }
                let q = m0 * m0 + m1 * m1;
                if q > r * r {
                    continue;
                }
                out.push((q, EigenMode::TorusCos { m: [m0, m1] }));
                out.push((q, EigenMode::TorusSin { m: [m0, m1] }));
            }
        }
        if out.len() > count {
            out.sort_by_key(|(q, _)| *q);
            let next = out[count].0 as f64 * k2;
            let pairs = out.into_iter().map(|(q, m)| (q as f64 * k2, m)).collect();
            return (pairs, next);
        }
        r += 1;
    }
}

fn sphere_modes(count: usize) -> (Vec<(f64, EigenMode)>, f64) {
    let mut out = Vec::new();
    let mut l = 0usize;
    while out.len() <= count {
        let lam = (l * (l + 1)) as f64;
        for m in -(l as i32)..=(l as i32) {
            out.push((lam, EigenMode::Sphere { l, m }));
        }
        l += 1;
    }
    let next = out[count].0;
    (out, next)
}

impl ContinuumEigensystem {
    /// Eigensystem large enough for `continuum_heat_apply` at time `t`.
    pub fn for_heat_time(manifold: ManifoldSpec, density: &DensitySpec, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(invalid("heat time must be positive"));
        }
        let lam_cut = -HEAT_TRUNCATION.ln() / t;
        let count = match manifold {
            ManifoldSpec::FlatTorus { side } => {
                let r = (lam_cut).sqrt() * side / (2.0 * PI);
                // lattice points in the disc plus a margin for the boundary shell
                (PI * (r + 2.0).powi(2)).ceil() as usize + 8
            }
            ManifoldSpec::Sphere => {
                let l = (lam_cut.sqrt()).ceil() as usize + 2;
                (l + 1) * (l + 1)
            }
        };
        continuum_eigensystem(manifold, density, count)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of leading modes with `e^{-tλ} > HEAT_TRUNCATION`, checking that
    /// the system is not cut before the tail is negligible.
    pub fn truncation_level(&self, t: f64) -> Result<usize> {
        let keep = self
            .eigenvalues
            .iter()
            .take_while(|&&l| (-t * l).exp() > HEAT_TRUNCATION)
            .count();
        if keep == self.len() && (-t * self.next_eigenvalue).exp() > HEAT_TRUNCATION {
            let lam_cut = -HEAT_TRUNCATION.ln() / t;
            return Err(Error::TruncationTooShort {
                needed: self.len() + 1,
                available: self.len(),
            })
            .map_err(|e| {
                log::debug!("eigensystem exhausted below λ = {lam_cut:.3e}");
                e
            });
        }
        Ok(keep)
    }

    /// Values of the first `count` eigenfunctions at `x`.
    pub fn evaluate_all(&self, x: &[f64], count: usize) -> Vec<f64> {
        let count = count.min(self.len());
        match self.manifold {
            ManifoldSpec::FlatTorus { side } => {
                let k = 2.0 * PI / side;
                self.modes[..count]
                    .iter()
                    .map(|m| self.inv_sqrt_xi * torus_mode_value(*m, x, k, side))
                    .collect()
            }
            ManifoldSpec::Sphere => {
                let lmax = match self.modes[..count].last() {
                    Some(EigenMode::Sphere { l, .. }) => *l,
                    _ => 0,
                };
                let table = SphericalHarmonicTable::new(lmax, x);
                self.modes[..count]
                    .iter()
                    .map(|m| match *m {
                        EigenMode::Sphere { l, m } => self.inv_sqrt_xi * table.value(l, m),
                        _ => unreachable!("torus mode in sphere eigensystem"),
                    })
                    .collect()
            }
        }
    }

    pub fn evaluate(&self, index: usize, x: &[f64]) -> f64 {
        match self.manifold {
            ManifoldSpec::FlatTorus { side } => {
                self.inv_sqrt_xi * torus_mode_value(self.modes[index], x, 2.0 * PI / side, side)
            }
            ManifoldSpec::Sphere => self.evaluate_all(x, index + 1)[index],
        }
    }

    /// `ξ` of the uniform density.
    pub fn xi(&self) -> f64 {
        1.0 / (self.inv_sqrt_xi * self.inv_sqrt_xi)
    }

    /// Projects samples of `f` at the grid nodes.
    pub fn project_samples(&self, grid: &QuadratureGrid, values: &[f64]) -> Projection {
        let xi = self.xi();
        let mut coefficients = vec![0.0; self.len()];
        for q in 0..grid.len() {
            let w = grid.weights[q] * xi * values[q];
            if w == 0.0 {
                continue;
            }
            let f = self.evaluate_all(grid.point(q), self.len());
            for (c, fl) in coefficients.iter_mut().zip(&f) {
                *c += w * fl;
            }
        }
        Projection { coefficients }
    }

    pub fn project_fn(&self, grid: &QuadratureGrid, f: impl Fn(&[f64]) -> f64) -> Projection {
        let values: Vec<f64> = (0..grid.len()).map(|q| f(grid.point(q))).collect();
        self.project_samples(grid, &values)
    }

    /// Closed-form coefficients of the indicator of the torus band
    /// `{a ≤ x_axis ≤ b}`.
    pub fn project_band(&self, axis: usize, a: f64, b: f64) -> Result<Projection> {
        let side = self
            .manifold
            .side()
            .ok_or_else(|| Error::Unsupported("bands live on the torus".into()))?;
        let k = 2.0 * PI / side;
        let other = 1 - axis;
        let scale = self.inv_sqrt_xi * self.xi();
        let coefficients = self
            .modes
            .iter()
            .map(|m| match *m {
                EigenMode::TorusConstant => scale * side * (b - a),
                EigenMode::TorusCos { m } | EigenMode::TorusSin { m } if m[other] != 0 => 0.0,
                EigenMode::TorusCos { m } => {
                    let q = m[axis] as f64 * k;
                    scale * std::f64::consts::SQRT_2 * side * ((q * b).sin() - (q * a).sin()) / q
                }
                EigenMode::TorusSin { m } => {
                    let q = m[axis] as f64 * k;
                    scale * std::f64::consts::SQRT_2 * side * ((q * a).cos() - (q * b).cos()) / q
                }
                EigenMode::Sphere { .. } => 0.0,
            })
            .collect();
        Ok(Projection { coefficients })
    }

    /// Spectral heat kernel `Σ_{l<count} e^{-tλ_l} f_l(x) f_l(y)`.
    pub fn kernel_spectral(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let count = self.truncation_level(t)?;
        let fx = self.evaluate_all(x, count);
        let fy = self.evaluate_all(y, count);
        Ok((0..count)
            .map(|l| (-t * self.eigenvalues[l]).exp() * fx[l] * fy[l])
            .sum())
    }

    /// Heat kernel of `Δ` against `ξ dVol` (uniform `ξ`), evaluated by the
    /// method of images on the torus and a zonal Legendre series on the
    /// sphere.
    pub fn kernel(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        heat_kernel(self.manifold, t, x, y)
    }
}

/// Heat kernel of the uniform weighted Laplacian against `ξ dVol`.
pub(crate) fn heat_kernel(manifold: ManifoldSpec, t: f64, x: &[f64], y: &[f64]) -> f64 {
    let vol = manifold.volume();
    match manifold {
        ManifoldSpec::FlatTorus { side } => {
            vol * vol * periodic_heat_1d(t, x[0] - y[0], side) * periodic_heat_1d(t, x[1] - y[1], side)
        }
        ManifoldSpec::Sphere => {
            let c = (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).clamp(-1.0, 1.0);
            let mut lmax = 1usize;
            while (lmax * (lmax + 1)) as f64 * t < -HEAT_TRUNCATION.ln() + ((2 * lmax + 1) as f64).ln() {
                lmax += 1;
            }
            let p = legendre_table(lmax, c);
            let s: f64 = (0..=lmax)
                .map(|l| (-t * (l * (l + 1)) as f64).exp() * (2 * l + 1) as f64 * p[l])
                .sum();
            vol * vol * s / (4.0 * PI)
        }
    }
}

/// Lebesgue heat kernel of `-d²/dx²` on a circle of length `side`.
pub(crate) fn periodic_heat_1d(t: f64, delta: f64, side: f64) -> f64 {
    let d = super::periodic_delta(0.0, delta, side);
    if t < 0.05 * side * side {
        let four_t = 4.0 * t;
        let reach = (four_t * 40.0).sqrt() / side;
        let m = reach.ceil() as i32 + 1;
        let s: f64 = (-m..=m)
            .map(|j| {
                let u = d + j as f64 * side;
                (-u * u / four_t).exp()
            })
            .sum();
        s / (PI * four_t).sqrt()
    } else {
        let k = 2.0 * PI / side;
        let mut s = 1.0;
        let mut j = 1;
        loop {
            let e = (-t * (j as f64 * k).powi(2)).exp();
            if e < 1e-18 {
                break;
            }
            s += 2.0 * e * (j as f64 * k * d).cos();
            j += 1;
        }
        s / side
    }
}

fn torus_mode_value(mode: EigenMode, x: &[f64], k: f64, side: f64) -> f64 {
    let lebesgue = match mode {
        EigenMode::TorusConstant => 1.0,
        EigenMode::TorusCos { m } => {
            std::f64::consts::SQRT_2 * (k * (m[0] as f64 * x[0] + m[1] as f64 * x[1])).cos()
        }
        EigenMode::TorusSin { m } => {
            std::f64::consts::SQRT_2 * (k * (m[0] as f64 * x[0] + m[1] as f64 * x[1])).sin()
        }
        EigenMode::Sphere { .. } => f64::NAN,
    };
    lebesgue / side
}

/// Orthonormal associated Legendre values and longitudes for one point.
struct SphericalHarmonicTable {
    lmax: usize,
    /// `P̄_l^m(cos θ)` at index `l(l+1)/2 + m`, normalised so that
    /// `Y_l0 = P̄_l^0` is `L²(S²)`-orthonormal.
    p: Vec<f64>,
    phi: f64,
}

impl SphericalHarmonicTable {
    fn new(lmax: usize, x: &[f64]) -> Self {
        let z = x[2].clamp(-1.0, 1.0);
        let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let phi = x[1].atan2(x[0]);
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let mut p = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
        p[0] = (1.0 / (4.0 * PI)).sqrt();
        for m in 1..=lmax {
            let mf = m as f64;
            p[idx(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[idx(m - 1, m - 1)];
        }
        for m in 0..lmax {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * z * p[idx(m, m)];
        }
        for m in 0..=lmax {
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                p[idx(l, m)] = a * (z * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
            }
        }
        Self { lmax, p, phi }
    }

    fn value(&self, l: usize, m: i32) -> f64 {
        debug_assert!(l <= self.lmax);
        let am = m.unsigned_abs() as usize;
        let base = self.p[l * (l + 1) / 2 + am];
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => base,
            std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * base * (am as f64 * self.phi).cos(),
            std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * base * (am as f64 * self.phi).sin(),
        }
    }
}

/// `e^{-tΔ} f` at the query points (flat coordinates) by spectral projection.
pub fn continuum_heat_apply(
    eig: &ContinuumEigensystem,
    t: f64,
    f: &Projection,
    query: &[f64],
) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(invalid("heat time must be positive"));
    }
    let count = eig.truncation_level(t)?;
    if f.coefficients.len() < count {
        return Err(Error::TruncationTooShort {
            needed: count,
            available: f.coefficients.len(),
        });
    }
    let damped: Vec<f64> = (0..count)
        .map(|l| (-t * eig.eigenvalues[l]).exp() * f.coefficients[l])
        .collect();
    let dim = eig.manifold.embedding_dim();
    Ok(query
        .chunks_exact(dim)
        .map(|x| {
            let vals = eig.evaluate_all(x, count);
            vals.iter().zip(&damped).map(|(a, b)| a * b).sum()
        })
        .collect())
}
