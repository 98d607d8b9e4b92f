//! Cell-centred periodic grids on the torus and the weighted heat flow on them.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::front::FrontDescriptor;
use crate::manifold::{DensitySpec, ManifoldSpec};

/// Values on the `N × N` cells of `[0, L)²`; cell `(i, j)` has centre
/// `((i + ½)L/N, (j + ½)L/N)` and index `i N + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub side: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(side: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(invalid(format!("grid size must be a power of two >= 4, got {n}")));
        }
        if !(side > 0.0) {
            return Err(invalid("grid side must be positive"));
        }
        if values.len() != n * n {
            return Err(invalid(format!("expected {} values, got {}", n * n, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        Ok(Self { side, n, values })
    }

    pub fn from_fn(side: f64, n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let h = side / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]));
            }
        }
        Self::new(side, n, values)
    }

    /// `1` on cells whose centre lies inside the region (`sd ≥ 0`).
    pub fn indicator(front: &FrontDescriptor, n: usize) -> Result<Self> {
        let side = match front.manifold {
            ManifoldSpec::FlatTorus { side } => side,
            ManifoldSpec::Sphere => return Err(invalid("grid fields live on the torus")),
        };
        Self::from_fn(side, n, |x| front.contains(x) as u8 as f64)
    }

    pub fn cell(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.cell();
        [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Value of the cell containing `x`.
    pub fn nearest(&self, x: &[f64]) -> f64 {
        let n = self.n as i64;
        let idx = |c: f64| ((c / self.cell()).floor() as i64).rem_euclid(n) as usize;
        self.at(idx(x[0]), idx(x[1]))
    }

    /// Periodic bilinear interpolation between cell centres.
    pub fn bilinear(&self, x: &[f64]) -> f64 {
        let n = self.n as i64;
        let h = self.cell();
        let gx = x[0] / h - 0.5;
        let gy = x[1] / h - 0.5;
        let (fx, fy) = (gx.floor(), gy.floor());
        let (tx, ty) = (gx - fx, gy - fy);
        let i0 = (fx as i64).rem_euclid(n) as usize;
        let j0 = (fy as i64).rem_euclid(n) as usize;
        let i1 = (i0 + 1) % self.n;
        let j1 = (j0 + 1) % self.n;
        (1.0 - tx) * ((1.0 - ty) * self.at(i0, j0) + ty * self.at(i0, j1))
            + tx * ((1.0 - ty) * self.at(i1, j0) + ty * self.at(i1, j1))
    }

    /// `Σ ξ u · cell²`
    pub fn weighted_mass(&self, density: &DensitySpec) -> f64 {
        let h = self.cell();
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += density.xi(&self.center(i, j)) * self.at(i, j);
            }
        }
        s * h * h
    }

    /// Area of `{u ≥ ½}` counted in cells.
    pub fn area_above_half(&self) -> f64 {
        let h = self.cell();
        self.values.iter().filter(|&&v| v >= 0.5).count() as f64 * h * h
    }
}

/// In-place 2-D FFT over a row-major `n × n` buffer.
fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// Exact Fourier multiplier `e^{-t (2π|m|/L)²}` for the flat Laplacian.
pub fn fft_heat(field: &GridField, t: f64) -> GridField {
    let n = field.n;
    let mut data: Vec<Complex<f64>> = field.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut data, n, false);
    let k = 2.0 * PI / field.side;
    let freq = |i: usize| -> f64 {
        let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        m * k
    };
    for i in 0..n {
        let a = freq(i);
        for j in 0..n {
            let b = freq(j);
            data[i * n + j] *= (-t * (a * a + b * b)).exp();
        }
    }
    fft2(&mut data, n, true);
    let inv = 1.0 / (n * n) as f64;
    GridField {
        side: field.side,
        n,
        values: data.iter().map(|c| c.re * inv).collect(),
    }
}

/// Options for the Crank–Nicolson path of [`grid_heat_step`].
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    /// Number of substeps (at least 16).
    pub substeps: usize,
    /// Replace the first two steps by four implicit-Euler half steps, damping
    /// the high-frequency content of discontinuous data.
    pub rannacher: bool,
    pub cg_tol: f64,
}

impl Default for CrankNicolson {
    fn default() -> Self {
        Self {
            substeps: 16,
            rannacher: true,
            cg_tol: 1e-14,
        }
    }
}

/// Flux-form discretisation of `ξ Δ_ξ u = −div(ξ ∇u)`.
struct WeightedStencil {
    n: usize,
    xi: Vec<f64>,
    /// `ξ` at the face between cell `(i,j)` and `(i+1,j)`, divided by cell².
    ex: Vec<f64>,
    /// `ξ` at the face between cell `(i,j)` and `(i,j+1)`, divided by cell².
    ey: Vec<f64>,
}

impl WeightedStencil {
    fn new(side: f64, n: usize, density: &DensitySpec) -> Self {
        let h = side / n as f64;
        let mut xi = vec![0.0; n * n];
        let mut ex = vec![0.0; n * n];
        let mut ey = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let c = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                xi[i * n + j] = density.xi(&c);
                ex[i * n + j] = density.xi(&[(i as f64 + 1.0) * h, c[1]]) / (h * h);
                ey[i * n + j] = density.xi(&[c[0], (j as f64 + 1.0) * h]) / (h * h);
            }
        }
        Self { n, xi, ex, ey }
    }

    /// `A u` with `A = div(ξ∇·)` (negative semidefinite, symmetric).
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for j in 0..n {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let c = i * n + j;
                let u0 = u[c];
                out[c] = self.ex[c] * (u[ip * n + j] - u0)
                    + self.ex[im * n + j] * (u[im * n + j] - u0)
                    + self.ey[c] * (u[i * n + jp] - u0)
                    + self.ey[i * n + jm] * (u[i * n + jm] - u0);
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|c| {
                let (i, j) = (c / n, c % n);
                let im = (i + n - 1) % n;
                let jm = (j + n - 1) % n;
                -(self.ex[c] + self.ex[im * n + j] + self.ey[c] + self.ey[i * n + jm])
            })
            .collect()
    }

    /// Solves `(Ξ − c A) x = b` by Jacobi-preconditioned CG.
    fn solve(&self, c: f64, b: &[f64], x: &mut [f64], tol: f64) -> Result<()> {
        let m = b.len();
        let diag: Vec<f64> = self
            .diagonal()
            .iter()
            .zip(&self.xi)
            .map(|(d, xi)| xi - c * d)
            .collect();
        let mut ax = vec![0.0; m];
        let op = |v: &[f64], out: &mut [f64], tmp: &mut [f64]| {
            self.apply(v, tmp);
            for k in 0..m {
                out[k] = self.xi[k] * v[k] - c * tmp[k];
            }
        };
        let mut tmp = vec![0.0; m];
        op(x, &mut ax, &mut tmp);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(p, d)| p / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; m];
        for _ in 0..10 * m.max(100) {
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn <= tol * bnorm {
                return Ok(());
            }
            op(&p, &mut ap, &mut tmp);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let alpha = rz / pap;
            for k in 0..m {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..m {
                z[k] = r[k] / diag[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..m {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(crate::Error::NonConvergence {
            iterations: 10 * m.max(100),
            worst_residual: r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm,
            target: tol,
            residuals: vec![],
        })
    }
}

/// Implicit time stepping of `∂_t u = (1/ξ) div(ξ ∇u)`.
pub fn crank_nicolson_heat(
    field: &GridField,
    t: f64,
    density: &DensitySpec,
    opts: &CrankNicolson,
) -> Result<GridField> {
    let n = field.n;
    let st = WeightedStencil::new(field.side, n, density);
    let steps = opts.substeps.max(16);
    let dt = t / steps as f64;
    let mut u = field.values.clone();
    let mut au = vec![0.0; n * n];
    let mut rhs = vec![0.0; n * n];
    let mut step_be = |u: &mut Vec<f64>, dt: f64| -> Result<()> {
        for k in 0..n * n {
            rhs[k] = st.xi[k] * u[k];
        }
        let mut x = u.clone();
        st.solve(dt, &rhs, &mut x, opts.cg_tol)?;
        *u = x;
        Ok(())
    };
    let mut done = 0;
    if opts.rannacher && steps >= 2 {
        for _ in 0..4 {
            step_be(&mut u, 0.5 * dt)?;
        }
        done = 2;
    }
    let mut rhs = vec![0.0; n * n];
    for _ in done..steps {
        st.apply(&u, &mut au);
        for k in 0..n * n {
            rhs[k] = st.xi[k] * u[k] + 0.5 * dt * au[k];
        }
        let mut x = u.clone();
        st.solve(0.5 * dt, &rhs, &mut x, opts.cg_tol)?;
        u = x;
    }
    GridField::new(field.side, n, u)
}

/// `e^{-tΔ_ξ}` on the grid: exact Fourier multiplier for the uniform density,
/// Crank–Nicolson otherwise.
pub fn grid_heat_step(field: &GridField, t: f64, density: &DensitySpec) -> Result<GridField> {
    if !(t > 0.0) {
        return Err(invalid(format!("heat time must be positive, got {t}")));
    }
    if density.manifold.side() != Some(field.side) {
        return Err(invalid("density and grid must live on the same torus"));
    }
    if density.is_uniform() {
        Ok(fft_heat(field, t))
    } else {
        crank_nicolson_heat(field, t, density, &CrankNicolson::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine_density() -> DensitySpec {
        DensitySpec::cosine(ManifoldSpec::unit_torus(), 0, 0.3).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let f = GridField::new(1.0, 32, vec![1.0; 1024]).unwrap();
        let u = DensitySpec::uniform(ManifoldSpec::unit_torus());
        for d in [u, cosine_density()] {
            let g = grid_heat_step(&f, 0.01, &d).unwrap();
            assert!(g.values.iter().all(|v| (v - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn cosine_mode_decays_exactly() {
        let f = GridField::from_fn(1.0, 64, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let t = 0.013;
        let g = grid_heat_step(&f, t, &DensitySpec::uniform(ManifoldSpec::unit_torus())).unwrap();
        let decay = (-4.0 * PI * PI * t).exp();
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - decay * b).abs() < 1e-13);
        }
    }

    #[test]
    fn weighted_mass_is_conserved() {
        let d = cosine_density();
        let f = GridField::from_fn(1.0, 64, |x| ((x[0] - 0.3).abs() < 0.2) as u8 as f64).unwrap();
        let g = grid_heat_step(&f, 0.005, &d).unwrap();
        assert!((g.weighted_mass(&d) - f.weighted_mass(&d)).abs() < 1e-10);
        let u = DensitySpec::uniform(ManifoldSpec::unit_torus());
        let g = grid_heat_step(&f, 0.005, &u).unwrap();
        assert!((g.weighted_mass(&u) - f.weighted_mass(&u)).abs() < 1e-10);
    }

    #[test]
    fn crank_nicolson_is_second_order_in_time() {
        // smooth data, no Rannacher start: errors against a fine reference
        // should shrink by ≈ 4 when the substep halves
        let d = cosine_density();
        let f = GridField::from_fn(1.0, 32, |x| (2.0 * PI * x[0]).sin() + 0.5 * (4.0 * PI * x[1]).cos())
            .unwrap();
        let t = 0.02;
        let run = |s: usize| {
            crank_nicolson_heat(&f, t, &d, &CrankNicolson { substeps: s, rannacher: false, cg_tol: 1e-14 })
                .unwrap()
        };
        let reference = run(1024);
        let err = |g: &GridField| {
            g.values
                .iter()
                .zip(&reference.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let (e16, e32) = (err(&run(16)), err(&run(32)));
        let ratio = e16 / e32;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        // Richardson extrapolation removes the leading term
        let extrap: Vec<f64> = run(32)
            .values
            .iter()
            .zip(&run(16).values)
            .map(|(a, b)| (4.0 * a - b) / 3.0)
            .collect();
        let e_extrap = extrap
            .iter()
            .zip(&reference.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(e_extrap < 0.1 * e32);
    }

    #[test]
    fn cn_matches_fft_for_uniform_density() {
        let u = DensitySpec::uniform(ManifoldSpec::unit_torus());
        let f = GridField::from_fn(1.0, 32, |x| (2.0 * PI * x[1]).cos()).unwrap();
        let cn = crank_nicolson_heat(&f, 0.01, &u, &CrankNicolson { substeps: 64, ..Default::default() })
            .unwrap();
        // second-order central differences: symbol (4/h²) sin²(πh)
        let h = 1.0 / 32.0;
        let lam = 4.0 / (h * h) * (PI * h).sin().powi(2);
        let exact = (-lam * 0.01).exp();
        for (a, b) in cn.values.iter().zip(&f.values) {
            assert!((a - exact * b).abs() < 1e-4);
        }
    }

    #[test]
    fn bilinear_reproduces_linear_data_inside() {
        let f = GridField::from_fn(1.0, 16, |x| x[0] + 2.0 * x[1]).unwrap();
        let v = f.bilinear(&[0.4, 0.3]);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_size_must_be_power_of_two() {
        assert!(GridField::new(1.0, 12, vec![0.0; 144]).is_err());
    }
}
