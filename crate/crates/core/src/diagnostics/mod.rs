//! Finite-n measurements of the hypotheses behind the convergence results:
//! monotonicity and mass defects of the heat operators, heat and kernel
//! approximation errors, spectral and degree convergence, and front tracking.

mod study;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::continuum::{grid_heat_step, FrontState, GridField};
use crate::error::{invalid, Error, Result};
use crate::graph::{kernel_constants, WeightedGraph};
use crate::manifold::{
    continuum_heat_apply, heat_kernel, ContinuumEigensystem, DensitySpec, ManifoldSpec, PointCloud, QuadratureGrid,
};
use crate::mbo::MboTrace;
use crate::spectral::{HeatOperator, SpectralDecomposition};
use crate::util::seeded_rng;

pub use study::{
    convergence_study, write_study_csv, write_study_long_csv, StudyRow, StudyRun, StudyScenario, STUDY_METRICS,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPrincipleReport {
    /// `max (S(h,u) − S(h,v))₊` over trials and nodes.
    pub error: f64,
    /// `error / (h^{3/2} (max|u| + max|v|))` at the worst trial.
    pub ratio: f64,
}

/// Tests monotonicity on random ordered pairs `u ≤ v` in `[-1, 1]`.
pub fn max_principle_error(handle: &HeatOperator, h: f64, trials: usize, seed: u64) -> Result<MaxPrincipleReport> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let n = handle.len();
    let mut rng = seeded_rng(seed);
    let mut worst = MaxPrincipleReport { error: 0.0, ratio: 0.0 };
    for trial in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        // even trials raise a single node to 1, which exposes the negative
        // lobes of a truncated kernel; odd trials add diffuse bumps
        let v: Vec<f64> = if trial % 2 == 0 {
            let j = rng.random_range(0..n);
            let mut v = u.clone();
            v[j] = 1.0;
            v
        } else {
            u.iter()
                .map(|&x| {
                    let p = if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 };
                    (x + p).clamp(-1.0, 1.0)
                })
                .collect()
        };
        let su = handle.apply(h, &u)?;
        let sv = handle.apply(h, &v)?;
        let err = su.iter().zip(&sv).fold(0.0f64, |m, (a, b)| m.max(a - b));
        let scale = h.powf(1.5) * (crate::util::sup_norm(&u) + crate::util::sup_norm(&v));
        if err > worst.error {
            worst = MaxPrincipleReport { error: err, ratio: err / scale };
        }
    }
    Ok(worst)
}

/// Smooth test function with known sup-norm and Lipschitz constant.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub sup: f64,
    pub lipschitz: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({}, sup {}, lip {})", self.name, self.sup, self.lipschitz)
    }
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        Self {
            name: format!("const({c})"),
            f: Arc::new(move |_| c),
            sup: c.abs(),
            lipschitz: 0.0,
        }
    }

    /// `a cos(2π (m·x)/L)` on the torus.
    pub fn torus_cos(side: f64, m: [i32; 2], amplitude: f64) -> Self {
        let k = 2.0 * PI / side;
        Self {
            name: format!("cos({},{})x{amplitude}", m[0], m[1]),
            f: Arc::new(move |x| amplitude * (k * (m[0] as f64 * x[0] + m[1] as f64 * x[1])).cos()),
            sup: amplitude.abs(),
            lipschitz: amplitude.abs() * k * (m[0] as f64).hypot(m[1] as f64),
        }
    }

    /// Periodic bump `exp(−(sin²(π(x₀−c₀)/L) + sin²(π(x₁−c₁)/L))/w²)`.
    pub fn torus_bump(side: f64, center: [f64; 2], width: f64) -> Self {
        let w2 = width * width;
        // each partial is at most (π/L)·√2/w·e^{-1/2}
        let lip = 2.0 * PI / (side * width) * (-0.5f64).exp();
        Self {
            name: format!("bump(w={width})"),
            f: Arc::new(move |x| {
                let a = (PI * (x[0] - center[0]) / side).sin();
                let b = (PI * (x[1] - center[1]) / side).sin();
                (-(a * a + b * b) / w2).exp()
            }),
            sup: 1.0,
            lipschitz: lip,
        }
    }

    /// `a x_axis` on the sphere.
    pub fn sphere_linear(axis: usize, amplitude: f64) -> Self {
        Self {
            name: format!("x{axis}x{amplitude}"),
            f: Arc::new(move |x| amplitude * x[axis]),
            sup: amplitude.abs(),
            lipschitz: amplitude.abs(),
        }
    }

    /// Gaussian cap `exp(−|x − p|²/w²)` on the sphere.
    pub fn sphere_bump(pole: [f64; 3], width: f64) -> Self {
        Self {
            name: format!("bump(w={width})"),
            f: Arc::new(move |x| {
                let d2: f64 = (0..3).map(|c| (x[c] - pole[c]).powi(2)).sum();
                (-d2 / (width * width)).exp()
            }),
            sup: 1.0,
            // max of 2r/w² e^{-r²/w²} is √2/w e^{-1/2}
            lipschitz: 2f64.sqrt() / width * (-0.5f64).exp(),
        }
    }

    /// Constants, low modes and a bump.
    pub fn standard_set(manifold: ManifoldSpec) -> Vec<Self> {
        match manifold {
            ManifoldSpec::FlatTorus { side } => vec![
                Self::constant(1.0),
                Self::torus_cos(side, [1, 0], 1.0),
                Self::torus_cos(side, [1, 1], 1.0),
                Self::torus_cos(side, [0, 2], 0.5),
                Self::torus_bump(side, [0.5 * side, 0.5 * side], 0.3),
            ],
            ManifoldSpec::Sphere => vec![
                Self::constant(1.0),
                Self::sphere_linear(2, 1.0),
                Self::sphere_linear(0, 0.5),
                Self::sphere_bump([0.0, 0.0, 1.0], 0.7),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatApproxRow {
    pub name: String,
    pub sup: f64,
    pub lipschitz: f64,
    /// `max_i |S_n(h,f)(x_i) − e^{-κhΔ_ξ} f(x_i)|`
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatApproxReport {
    pub rows: Vec<HeatApproxRow>,
    /// Least-squares fit `error ≈ a sup|f| + b Lip(f)`; `a/√h` and `b/h^{3/2}`
    /// are the normalised coefficients.
    pub fit_sup: f64,
    pub fit_lip: f64,
    pub fit_sup_normalized: f64,
    pub fit_lip_normalized: f64,
    /// Condition number of the fit's design matrix; large values mean the two
    /// contributions cannot be told apart by this test set.
    pub fit_condition: f64,
}

/// Continuum reference `e^{-tΔ_ξ} f` at the nodes: spectral for the uniform
/// density, Crank–Nicolson on a grid for a perturbed torus density.
fn continuum_reference(
    cloud: &PointCloud,
    density: &DensitySpec,
    t: f64,
    f: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
) -> Result<Vec<f64>> {
    if density.is_uniform() {
        let eig = ContinuumEigensystem::for_heat_time(cloud.manifold, density, t)?;
        let q = match cloud.manifold {
            ManifoldSpec::FlatTorus { .. } => 160,
            ManifoldSpec::Sphere => 96,
        };
        let grid = QuadratureGrid::new(cloud.manifold, q);
        let proj = eig.project_fn(&grid, f);
        continuum_heat_apply(&eig, t, &proj, cloud.coords())
    } else {
        match cloud.manifold {
            ManifoldSpec::FlatTorus { side } => {
                let field = GridField::from_fn(side, 256, f)?;
                let u = grid_heat_step(&field, t, density)?;
                Ok(cloud.points().map(|x| u.bilinear(x)).collect())
            }
            ManifoldSpec::Sphere => Err(Error::Unsupported(
                "no heat oracle for non-uniform densities on the sphere".into(),
            )),
        }
    }
}

/// Compares the graph heat operator at time `h` with the continuum semigroup
/// at time `κh` on each test function.
pub fn heat_approx_error(
    handle: &HeatOperator,
    cloud: &PointCloud,
    density: &DensitySpec,
    h: f64,
    kappa: f64,
    tests: &[TestFunction],
) -> Result<HeatApproxReport> {
    if cloud.len() != handle.len() {
        return Err(invalid("cloud and operator sizes differ"));
    }
    let mut rows = Vec::with_capacity(tests.len());
    for tf in tests {
        let values: Vec<f64> = cloud.points().map(|x| (tf.f)(x)).collect();
        let graph = handle.apply(h, &values)?;
        let reference = continuum_reference(cloud, density, kappa * h, tf.f.as_ref())?;
        let error = graph
            .iter()
            .zip(&reference)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rows.push(HeatApproxRow {
            name: tf.name.clone(),
            sup: tf.sup,
            lipschitz: tf.lipschitz,
            error,
        });
    }
    let design = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].sup } else { rows[i].lipschitz });
    let rhs = DMatrix::from_fn(rows.len(), 1, |i, _| rows[i].error);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let fit_condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let (fit_sup, fit_lip) = match svd.solve(&rhs, 1e-12 * smax) {
        Ok(x) => (x[0], x[1]),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(HeatApproxReport {
        rows,
        fit_sup,
        fit_lip,
        fit_sup_normalized: fit_sup / h.sqrt(),
        fit_lip_normalized: fit_lip / h.powf(1.5),
        fit_condition,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub max_principle_error: f64,
    pub max_principle_ratio: f64,
    pub heat: HeatApproxReport,
    pub mass_defect: f64,
    pub h_3_2: f64,
    pub sqrt_h: f64,
    /// `mass_defect / √h`
    pub mass_ratio: f64,
}

/// Monotonicity, heat approximation and mass conservation of one operator.
#[allow(clippy::too_many_arguments)]
pub fn condition_report(
    handle: &HeatOperator,
    cloud: &PointCloud,
    density: &DensitySpec,
    h: f64,
    kappa: f64,
    tests: &[TestFunction],
    trials: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let mp = max_principle_error(handle, h, trials, seed)?;
    let heat = heat_approx_error(handle, cloud, density, h, kappa, tests)?;
    let mass_defect = handle.mass_defect(h)?;
    Ok(ConditionReport {
        max_principle_error: mp.error,
        max_principle_ratio: mp.ratio,
        heat,
        mass_defect,
        h_3_2: h.powf(1.5),
        sqrt_h: h.sqrt(),
        mass_ratio: mass_defect / h.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelCheckMode {
    /// All `n²` pairs.
    Exhaustive,
    /// Full rows for `rows` random source nodes.
    Sampled { rows: usize, seed: u64 },
    /// Exhaustive up to [`EXHAUSTIVE_CAP`] nodes, else 400 sampled rows.
    Auto,
}

pub const EXHAUSTIVE_CAP: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelErrorReport {
    pub sup_error: f64,
    /// `sup_error · n / √h`
    pub normalized: f64,
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

/// `max |H^K(h, x, y) − (ρ(y)/n) H(κh, x, y)|` over node pairs.
pub fn kernel_sup_error(
    dec: &SpectralDecomposition,
    cloud: &PointCloud,
    h: f64,
    kappa: f64,
    density: &DensitySpec,
    mode: KernelCheckMode,
) -> Result<KernelErrorReport> {
    if !density.is_uniform() {
        return Err(Error::Unsupported("kernel oracle needs the uniform density".into()));
    }
    let n = dec.n();
    if cloud.len() != n {
        return Err(invalid("cloud and decomposition sizes differ"));
    }
    let rows: Vec<usize> = match mode {
        KernelCheckMode::Exhaustive => (0..n).collect(),
        KernelCheckMode::Auto if n <= EXHAUSTIVE_CAP => (0..n).collect(),
        KernelCheckMode::Auto => sample_rows(n, 400, 0x6b65726e),
        KernelCheckMode::Sampled { rows, seed } => sample_rows(n, rows, seed),
    };
    let exhaustive = rows.len() == n;
    let t = kappa * h;
    let manifold = cloud.manifold;
    let inv_n = 1.0 / n as f64;
    let sup_error = rows
        .par_iter()
        .map(|&i| {
            let hk = dec.truncated_kernel_row(h, i);
            let x = cloud.point(i);
            hk.iter().enumerate().fold(0.0f64, |m, (j, &a)| {
                let y = cloud.point(j);
                let b = density.value(y) * inv_n * heat_kernel(manifold, t, x, y);
                m.max((a - b).abs())
            })
        })
        .reduce(|| 0.0, f64::max);
    Ok(KernelErrorReport {
        sup_error,
        normalized: sup_error * n as f64 / h.sqrt(),
        pairs_checked: rows.len() * n,
        exhaustive,
    })
}

fn sample_rows(n: usize, rows: usize, seed: u64) -> Vec<usize> {
    if rows >= n {
        return (0..n).collect();
    }
    let mut rng = seeded_rng(seed);
    let mut v = rand::seq::index::sample(&mut rng, n, rows).into_vec();
    v.sort_unstable();
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueRow {
    /// One-based sorted index.
    pub l: usize,
    pub graph: f64,
    pub continuum: f64,
    /// `|λ_n^l − κ λ_l|`
    pub abs_error: f64,
    /// `λ_n^l / κ`
    pub scaled: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenspaceGroup {
    pub eigenvalue: f64,
    /// One-based indices `first..=last` of the group.
    pub first: usize,
    pub last: usize,
    /// Largest principal angle between the spans, in degrees.
    pub max_angle_deg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConvergenceReport {
    pub rows: Vec<EigenvalueRow>,
    pub groups: Vec<EigenspaceGroup>,
}

/// Largest principal angle (degrees) between the span of `a` and the span of
/// `b` (columns), both sampled at the nodes, in `⟨·,·⟩_V`.
pub fn principal_angle_deg(a: &DMatrix<f64>, b: &DMatrix<f64>, degrees: &[f64]) -> f64 {
    let n = degrees.len() as f64;
    let weight = |m: &DMatrix<f64>| {
        let mut w = m.clone();
        for (i, mut row) in w.row_iter_mut().enumerate() {
            row *= (degrees[i] / n).sqrt();
        }
        w
    };
    let qa = weight(a).qr().q();
    let qb = weight(b).qr().q();
    let cross = qa.transpose() * qb;
    let smin = cross.singular_values().min().clamp(0.0, 1.0);
    smin.acos().to_degrees()
}

/// Graph eigenvalues against `κ λ_l` and eigenspace angles per continuum
/// multiplicity group fully inside the first `count` indices.
pub fn spectral_convergence_report(
    dec: &SpectralDecomposition,
    cloud: &PointCloud,
    density: &DensitySpec,
    kappa: f64,
    count: usize,
) -> Result<SpectralConvergenceReport> {
    if count == 0 || count > dec.k() {
        return Err(invalid(format!("need 1 <= L <= K = {}, got {count}", dec.k())));
    }
    // one extra group so that the last one can be recognised as complete
    let eig = crate::manifold::continuum_eigensystem(cloud.manifold, density, count + 1)?;
    let rows: Vec<EigenvalueRow> = (0..count)
        .map(|l| EigenvalueRow {
            l: l + 1,
            graph: dec.eigenvalues[l],
            continuum: eig.eigenvalues[l],
            abs_error: (dec.eigenvalues[l] - kappa * eig.eigenvalues[l]).abs(),
            scaled: dec.eigenvalues[l] / kappa,
        })
        .collect();
    let mut groups = Vec::new();
    let mut start = 0;
    while start < count {
        let lam = eig.eigenvalues[start];
        let mut end = start;
        while end + 1 < eig.len() && (eig.eigenvalues[end + 1] - lam).abs() <= 1e-9 * lam.max(1.0) {
            end += 1;
        }
        if end >= count {
            break;
        }
        let m = end - start + 1;
        let a = DMatrix::from_fn(dec.n(), m, |i, c| dec.value(i, start + c));
        let b = DMatrix::from_fn(dec.n(), m, |i, c| eig.evaluate(start + c, cloud.point(i)));
        groups.push(EigenspaceGroup {
            eigenvalue: lam,
            first: start + 1,
            last: end + 1,
            max_angle_deg: principal_angle_deg(&a, &b, &dec.degrees),
        });
        start = end + 1;
    }
    Ok(SpectralConvergenceReport { rows, groups })
}

/// `max_i |d_n(x_i) − C₁ ρ(x_i)|`.
pub fn degree_density_error(graph: &WeightedGraph, density: &DensitySpec) -> Result<f64> {
    let c1 = kernel_constants(graph.kernel, graph.cloud.manifold.intrinsic_dim())?.c1;
    Ok(graph
        .cloud
        .points()
        .zip(graph.degrees())
        .fold(0.0f64, |m, (x, d)| m.max((d - c1 * density.value(x)).abs())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontErrorRow {
    pub t: f64,
    /// Disagreeing nodes outside the collar, over all nodes.
    pub disagreement: f64,
    /// Largest distance to `Γ_t` among disagreeing nodes (collar included);
    /// infinite if the reference has no boundary but labels disagree.
    pub max_wrong_distance: f64,
    pub reference_extinct: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontError {
    pub rows: Vec<FrontErrorRow>,
    /// First time the trace has no ones.
    pub extinction_estimate: Option<f64>,
}

/// Compares trace labels at each sample time with the reference flow,
/// ignoring nodes within `collar` of the reference boundary.
pub fn front_error(
    trace: &MboTrace,
    cloud: &PointCloud,
    flow: &dyn Fn(f64) -> Result<FrontState>,
    times: &[f64],
    collar: f64,
) -> Result<FrontError> {
    if !(collar >= 0.0) {
        return Err(invalid("collar width must be nonnegative"));
    }
    let n = cloud.len();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let state = trace.state_at(t)?;
        let reference = flow(t)?;
        let (mut wrong, mut worst) = (0usize, 0.0f64);
        for (i, x) in cloud.points().enumerate() {
            let sd = match &reference {
                FrontState::Alive(d) => d.signed_distance(x),
                FrontState::Extinct => f64::NEG_INFINITY,
            };
            let want = sd >= 0.0;
            if (state.get(i) == 1) != want {
                worst = worst.max(sd.abs());
                if sd.abs() > collar {
                    wrong += 1;
                }
            }
        }
        rows.push(FrontErrorRow {
            t,
            disagreement: wrong as f64 / n.max(1) as f64,
            max_wrong_distance: worst,
            reference_extinct: matches!(reference, FrontState::Extinct),
        });
    }
    Ok(FrontError {
        rows,
        extinction_estimate: trace.extinction_time(),
    })
}

/// Default collar `2(ε + h)`.
pub fn default_collar(eps: f64, h: f64) -> f64 {
    2.0 * (eps + h)
}
