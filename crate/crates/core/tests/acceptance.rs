//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. `MBOLAB_ONLY=3,4` restricts the run to a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use mbolab::continuum::{
    consistency_probe, continuum_mbo_step, continuum_mbo_step_with_field, drift_front_ode, normal_displacement,
    AfterSet, ContinuumMboConfig, FrontState, GridField, LevelSet, ProbeOptions,
};
use mbolab::diagnostics::{default_collar, front_error, kernel_sup_error, max_principle_error, KernelCheckMode};
use mbolab::front::FrontDescriptor;
use mbolab::graph::{kernel_constants, KernelProfile, WeightedGraph};
use mbolab::manifold::{sample_points, DensitySpec, ManifoldSpec, PointCloud};
use mbolab::mbo::{initial_state_from_region, run_mbo, MboTrace};
use mbolab::schedule::{check_admissible, exponents, schedule_for_n, ScheduleParams};
use mbolab::spectral::{partial_eigendecomposition, EigenOptions, HeatOperator, KrylovOptions};
use mbolab::util::{linear_fit, median};

type Outcome = Result<(bool, String), mbolab::Error>;

/// `κ(η) = C₂/(2C₁)` for the indicator on the unit disc: `C₁ = π`,
/// `C₂ = ∫_{|z|≤1} z₁² dz = π/4`.
const KAPPA: f64 = 1.0 / 8.0;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn torus() -> ManifoldSpec {
    ManifoldSpec::unit_torus()
}

fn uniform() -> DensitySpec {
    DensitySpec::uniform(torus())
}

fn graph(n: usize, eps: f64, density: DensitySpec, seed: u64) -> mbolab::Result<WeightedGraph> {
    let cloud = sample_points(density.manifold, density, n, seed)?;
    WeightedGraph::build(cloud, eps, KernelProfile::Indicator)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

// 1 -----------------------------------------------------------------------

fn conservation() -> Outcome {
    let sphere = ManifoldSpec::sphere();
    let cases = [
        ("torus n=2048", graph(2048, 0.08, uniform(), 11)?),
        ("torus cosine n=1500", graph(1500, 0.1, DensitySpec::cosine(torus(), 0, 0.3)?, 12)?),
        ("sphere n=1200", graph(1200, 0.25, DensitySpec::uniform(sphere), 13)?),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, g) in &cases {
        let full = HeatOperator::full(g)?;
        let mut row_sum = 0.0f64;
        let mut mp = 0.0f64;
        for h in [0.002, 0.01, 0.05] {
            row_sum = row_sum.max(full.mass_defect(h)?);
            mp = mp.max(max_principle_error(&full, h, 20, 5)?.error);
        }
        let opts = EigenOptions { tol: 1e-10, ..Default::default() };
        let dec = partial_eigendecomposition(g, 40, &opts)?;
        let trunc = HeatOperator::truncated(&dec);
        let mut mass = 0.0f64;
        for h in [0.002, 0.01, 0.05] {
            mass = mass.max(trunc.mass_defect(h)?);
        }
        ok &= row_sum <= 1e-10 && mp <= 1e-10 && mass <= 1e-8;
        notes.push(format!("{name}: row-sum {row_sum:.1e}, max-principle {mp:.1e}, truncated mass {mass:.1e}"));
    }
    // above the dense cap the full operator is a Krylov approximation
    let g = graph(6000, 0.05, uniform(), 14)?;
    let kry = HeatOperator::krylov(&g, KrylovOptions::default())?;
    let kd = kry.mass_defect(0.01)?;
    let kmp = max_principle_error(&kry, 0.01, 6, 5)?.error;
    notes.push(format!("(info) krylov n=6000: row-sum {kd:.1e}, max-principle {kmp:.1e}"));
    Ok((ok, notes.join("; ")))
}

// 2 -----------------------------------------------------------------------

/// `e^{-tΔ_n}` built from scratch: pairwise periodic distances, indicator
/// weights `ε⁻² 1{d ≤ ε}`, `Δ_n = ε⁻²(I − D⁻¹W/n)`, Padé exponential.
fn oracle_heat(cloud: &PointCloud, eps: f64, t: f64) -> DMatrix<f64> {
    let n = cloud.len();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for c in 0..2 {
            let d = (a[c] - b[c]).abs();
            let d = d.min(1.0 - d);
            s += d * d;
        }
        s.sqrt()
    };
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && dist(cloud.point(i), cloud.point(j)) <= eps {
            1.0 / (eps * eps)
        } else {
            0.0
        }
    });
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum() / n as f64).collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (id - w[(i, j)] / (deg[i] * n as f64)) / (eps * eps)
    });
    (-t * lap).exp()
}

fn oracle_equivalence() -> Outcome {
    let results: Vec<(f64, f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|s| -> mbolab::Result<(f64, f64, f64)> {
            let n = 20 + (s as usize * 7) % 31;
            let eps = 0.3 + 0.01 * s as f64;
            let t = 0.002 * (1 + s) as f64;
            let g = graph(n, eps, uniform(), 100 + s)?;
            let e = oracle_heat(&g.cloud, eps, t);
            let dec = partial_eigendecomposition(&g, n, &EigenOptions { tol: 1e-12, ..Default::default() })?;
            let mut kern = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    kern = kern.max((dec.truncated_kernel_entry(t, i, j) - e[(i, j)]).abs());
                }
            }
            let u: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 / 5.0) - 1.0).collect();
            let want = &e * nalgebra::DVector::from_vec(u.clone());
            let sup = |v: &[f64]| v.iter().zip(want.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let dense = sup(&HeatOperator::dense(&g)?.apply(t, &u)?);
            let kry = sup(&HeatOperator::krylov(&g, KrylovOptions::default())?.apply(t, &u)?);
            let trunc = sup(&HeatOperator::truncated(&dec).apply(t, &u)?);
            Ok((kern, dense.max(kry), trunc))
        })
        .collect::<mbolab::Result<_>>()?;
    let kern = results.iter().fold(0.0f64, |m, r| m.max(r.0));
    let full = results.iter().fold(0.0f64, |m, r| m.max(r.1));
    let trunc = results.iter().fold(0.0f64, |m, r| m.max(r.2));
    let ok = kern <= 1e-9 && full <= 1e-9 && trunc <= 1e-9;
    Ok((ok, format!("10 graphs: kernel K=n {kern:.1e}, full apply {full:.1e}, truncated apply {trunc:.1e}")))
}

// 3 -----------------------------------------------------------------------

fn spectral_convergence() -> Outcome {
    let kc = kernel_constants(KernelProfile::Indicator, 2)?.kappa;
    let scaled: Vec<Vec<f64>> = SEEDS
        .par_iter()
        .map(|&s| -> mbolab::Result<Vec<f64>> {
            let g = graph(8000, 0.06, uniform(), s)?;
            let dec = partial_eigendecomposition(&g, 6, &EigenOptions::default())?;
            let mut v: Vec<f64> = dec.eigenvalues[1..5].iter().map(|l| l / KAPPA).collect();
            v.sort_by(f64::total_cmp);
            Ok(v)
        })
        .collect::<mbolab::Result<_>>()?;
    let target = 4.0 * PI * PI;
    let medians: Vec<f64> = (0..4).map(|l| median(&scaled.iter().map(|v| v[l]).collect::<Vec<_>>())).collect();
    let worst = medians.iter().fold(0.0f64, |m, v| m.max((v / target - 1.0).abs()));
    let ok = worst <= 0.15 && (kc - KAPPA).abs() < 1e-15;
    Ok((ok, format!("median λ_l/κ for l=2..5: [{}] vs 4π² = {target:.4}, worst rel {worst:.3}", fmt_list(&medians))))
}

// 4, 5, 12 ----------------------------------------------------------------

const N_BIG: usize = 20000;
const EPS_BIG: f64 = 0.05;
const H_BIG: f64 = 0.004;

fn r2_of(trace: &MboTrace, l: usize, n: usize) -> f64 {
    let s = &trace.states[l.min(trace.len() - 1)];
    s.ones_count() as f64 / n as f64 / PI
}

fn shrinking_circle(g: &WeightedGraph, traces: &mut Vec<(String, MboTrace)>) -> Outcome {
    let r0 = 0.25;
    let disc = FrontDescriptor::circle(torus(), [0.5, 0.5], r0)?;
    let op = HeatOperator::full(g)?;
    let chi0 = initial_state_from_region(&g.cloud, &disc);
    let t_ext = r0 * r0 / (2.0 * KAPPA);
    let steps = (2.0 * t_ext / H_BIG).ceil() as usize;
    let trace = run_mbo(&op, H_BIG, chi0, steps, true)?;
    // a pinned run keeps its last state for the rest of the window
    let half = r0 * r0 / (4.0 * KAPPA);
    let last = (half / H_BIG).floor() as usize;
    let ts: Vec<f64> = (0..=last).map(|l| l as f64 * H_BIG).collect();
    let r2: Vec<f64> = (0..=last).map(|l| r2_of(&trace, l, g.len())).collect();
    let slope = linear_fit(&ts, &r2).0;
    let ext = trace.extinction_time();
    let slope_ok = (slope / (-2.0 * KAPPA) - 1.0).abs() <= 0.25;
    let ext_ok = ext.is_some_and(|e| (e / t_ext - 1.0).abs() <= 0.25);
    let mut msg = format!(
        "slope of r² {slope:.4} vs {:.4}; extinction {} vs {t_ext:.4}; pinned at {:?}",
        -2.0 * KAPPA,
        ext.map_or("none".to_string(), |e| format!("{e:.4}")),
        trace.pinned_at
    );
    if !(slope_ok && ext_ok) {
        // not gating: the same graph with h well above ε²
        let h = 0.02;
        let info = run_mbo(&op, h, initial_state_from_region(&g.cloud, &disc), (2.0 * t_ext / h) as usize, true)?;
        let last = (half / h).floor() as usize;
        let ts: Vec<f64> = (0..=last).map(|l| l as f64 * h).collect();
        let r2: Vec<f64> = (0..=last).map(|l| r2_of(&info, l, g.len())).collect();
        msg += &format!(
            "; (info) h = {h}: slope {:.4}, extinction {}",
            linear_fit(&ts, &r2).0,
            info.extinction_time().map_or("none".to_string(), |e| format!("{e:.4}"))
        );
    }
    traces.push(("circle".into(), trace));
    Ok((slope_ok && ext_ok, msg))
}

fn stationary_band(g: &WeightedGraph, traces: &mut Vec<(String, MboTrace)>) -> Outcome {
    let band = FrontDescriptor::band(torus(), 0, 0.25, 0.75)?;
    let op = HeatOperator::full(g)?;
    let trace = run_mbo(&op, H_BIG, initial_state_from_region(&g.cloud, &band), 50, false)?;
    let times: Vec<f64> = (0..=50).map(|l| l as f64 * H_BIG).collect();
    let flow = |_t: f64| Ok(FrontState::Alive(band));
    let collar = default_collar(EPS_BIG, H_BIG);
    let fe = front_error(&trace, &g.cloud, &flow, &times, collar)?;
    let worst = fe.rows.iter().fold(0.0f64, |m, r| m.max(r.disagreement));
    let msg = format!("max disagreement outside collar {collar:.3} over 50 steps: {worst:e}");
    traces.push(("band".into(), trace));
    Ok((worst == 0.0, msg))
}

fn energy_monotonicity(traces: &[(String, MboTrace)]) -> Outcome {
    if traces.is_empty() {
        return Ok((false, "no traces recorded".into()));
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, t) in traces {
        match t.max_energy_increase() {
            Some(inc) => {
                ok &= inc <= 1e-10;
                notes.push(format!("{name} {inc:.1e}"));
            }
            None => {
                ok = false;
                notes.push(format!("{name} has no energies"));
            }
        }
    }
    Ok((ok, format!("max energy increase per trace: {}", notes.join(", "))))
}

// 6 -----------------------------------------------------------------------

fn one_step_displacement() -> Outcome {
    let r = 0.25;
    let kappa = 1.0;
    let hs = [1e-3, 2e-3, 4e-3, 8e-3];
    let disc = FrontDescriptor::circle(torus(), [0.5, 0.5], r)?;
    let f = GridField::indicator(&disc, 512)?;
    let zs: Vec<f64> = hs
        .iter()
        .map(|&h| -> mbolab::Result<f64> {
            let cfg = ContinuumMboConfig::new(kappa, h)?;
            let (_, u) = continuum_mbo_step_with_field(&f, &cfg, &uniform())?;
            Ok(normal_displacement(&disc, &AfterSet::Level { field: &u, level: 0.5 }, 128)?.max_abs)
        })
        .collect::<mbolab::Result<_>>()?;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let slope = linear_fit(&lx, &ly).0;
    let bound = 1.5 * kappa / r;
    let ratio = zs.iter().zip(&hs).fold(0.0f64, |m, (z, h)| m.max(z / h));
    let ok = (0.9..=1.1).contains(&slope) && ratio <= bound;
    Ok((ok, format!("max|z| = [{}], slope {slope:.3}, max|z|/h {ratio:.3} vs {bound}", fmt_list(&zs))))
}

// 7 -----------------------------------------------------------------------

fn consistency() -> Outcome {
    let r0 = 0.25;
    let psi = LevelSet::circle([0.5, 0.5], r0);
    let target = 1.0 / (2.0 * PI.sqrt() * r0);
    let hs = [2e-3, 1e-3, 5e-4, 2.5e-4];
    let rows = consistency_probe(&psi, [0.5 + r0, 0.5], 1.0, &hs, &uniform(), &ProbeOptions { grid_n: 1024 })?;
    let gaps: Vec<f64> = rows.iter().map(|r| (r.lhs - target).abs() / target).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing && *gaps.last().unwrap() <= 0.10;
    Ok((ok, format!("relative gaps [{}] vs 1/(2√π r₀) = {target:.5}", fmt_list(&gaps))))
}

// 8 -----------------------------------------------------------------------

const AMP: f64 = 0.3;

/// Inverts the `ρ`-mass of the band `[p, 1 − p]` for `p`, with
/// `ρ = 1 + a cos 2πx`: mass `= 1 − 2 F(p)`, `F(x) = x + a sin(2πx)/(2π)`.
fn band_edge_from_mass(mass: f64) -> f64 {
    let cdf = |x: f64| x + AMP * (2.0 * PI * x).sin() / (2.0 * PI);
    let target = 0.5 * (1.0 - mass);
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn weighted_drift(traces: &mut Vec<(String, MboTrace)>) -> Outcome {
    let a0 = 0.25;
    let (eps, h, steps) = (0.04, 0.0125, 4);
    let t_end = h * steps as f64;
    let density = DensitySpec::cosine(torus(), 0, AMP)?;
    let band = FrontDescriptor::band(torus(), 0, a0, 1.0 - a0)?;
    let ode = drift_front_ode(a0, &density, KAPPA, t_end)?;

    // one seed's displacement scatters by about ±40%, so the median needs
    // more seeds than the other criteria
    let seeds: Vec<u64> = (1..=10).collect();
    let runs: Vec<(f64, MboTrace)> = seeds
        .par_iter()
        .map(|&s| -> mbolab::Result<(f64, MboTrace)> {
            let g = graph(N_BIG, eps, density, 200 + s)?;
            let op = HeatOperator::full(&g)?;
            let trace = run_mbo(&op, h, initial_state_from_region(&g.cloud, &band), steps, false)?;
            let mass = trace.states[steps].ones_count() as f64 / g.len() as f64;
            Ok((band_edge_from_mass(mass), trace))
        })
        .collect::<mbolab::Result<_>>()?;
    let positions: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (r_min, r_max) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
        let r = (p - a0) / (ode - a0);
        (a.min(r), b.max(r))
    });
    for (s, (_, t)) in seeds.iter().zip(runs) {
        traces.push((format!("drift seed {s}"), t));
    }
    let p_graph = median(&positions);
    let ratio = (p_graph - a0) / (ode - a0);

    // continuum MBO with the same κ and h as an independent route to the
    // ODE; the edge is the ½-crossing of the last diffused field
    let mut f = GridField::indicator(&band, 512)?;
    let cfg = ContinuumMboConfig::new(KAPPA, h)?;
    for _ in 0..steps - 1 {
        f = continuum_mbo_step(&f, &cfg, &density)?;
    }
    let (_, u) = continuum_mbo_step_with_field(&f, &cfg, &density)?;
    let (mut lo, mut hi) = (a0 - 0.1, a0 + 0.1);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if u.bilinear(&[mid, 0.5]) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_cont = 0.5 * (lo + hi);
    let ratio_cont = (p_cont - a0) / (ode - a0);

    let ok = (0.7..=1.3).contains(&ratio) && (0.7..=1.3).contains(&ratio_cont);
    Ok((
        ok,
        format!(
            "t={t_end}: ODE edge {ode:.5}, graph median {p_graph:.5} (displacement ratio {ratio:.3}, \
             seeds {r_min:.2}..{r_max:.2}, position rel err {:.2e}), continuum {p_cont:.5} (ratio {ratio_cont:.3})",
            (p_graph - ode).abs() / ode
        ),
    ))
}

// 9 -----------------------------------------------------------------------

fn kernel_trend() -> Outcome {
    let params = ScheduleParams::desk();
    let mut medians = Vec::new();
    let mut ks = Vec::new();
    for n in [2000, 4000, 8000] {
        let row = schedule_for_n(&params, n)?;
        let vals: Vec<f64> = SEEDS
            .par_iter()
            .map(|&s| -> mbolab::Result<f64> {
                let g = graph(n, row.eps, uniform(), 300 + s)?;
                let dec = partial_eigendecomposition(&g, row.k_n, &EigenOptions::default())?;
                let rep = kernel_sup_error(&dec, &g.cloud, row.h, KAPPA, &uniform(), KernelCheckMode::Auto)?;
                Ok(rep.normalized)
            })
            .collect::<mbolab::Result<_>>()?;
        medians.push(median(&vals));
        ks.push(format!("K={} ε={:.4} h={:.4}", row.k_n, row.eps, row.h));
    }
    let ok = medians.windows(2).all(|w| w[1] <= w[0]);
    Ok((ok, format!("median sup·n/√h: [{}] ({})", fmt_list(&medians), ks.join("; "))))
}

// 10 ----------------------------------------------------------------------

fn pinning() -> Outcome {
    let eps = 0.08;
    let h = 0.01 * eps * eps;
    let g = graph(2000, eps, uniform(), 21)?;
    let disc = FrontDescriptor::circle(torus(), [0.5, 0.5], 0.25)?;
    let op = HeatOperator::full(&g)?;
    let chi0 = initial_state_from_region(&g.cloud, &disc);
    let trace = run_mbo(&op, h, chi0.clone(), 3, false)?;
    let flips = trace.states[1].changed_nodes(&chi0);
    Ok((trace.pinned_at == Some(0), format!("h = {h:.1e}: pinned at {:?}, {flips} flip(s) on step one", trace.pinned_at)))
}

// 11 ----------------------------------------------------------------------

fn schedule_calculus() -> Outcome {
    let (k, s, q) = (2usize, 0.25, 5.0);
    let (alpha, beta) = exponents(k, s, q)?;
    // α = −1 + 2q/k − sq, β = −½ + 4q + 13q/k − sq/2
    let alpha_ok = (alpha - 2.75).abs() < 1e-12;
    let beta_ok = (beta - 51.375).abs() < 1e-12;
    let adm = check_admissible(k, s, q).admissible;

    let mut p = ScheduleParams::desk();
    p.q = q;
    let row = schedule_for_n(&p, 10_000)?;
    let raw_expected = 10_000f64.ln().powi(5);
    let raw = row.k_raw.unwrap_or(f64::NAN);
    let clamp_ok = row.clamped && row.k_n == 10_000 && (raw / raw_expected - 1.0).abs() < 1e-12 && raw > 6.6e4;

    // admissible iff q (2/k − s) > 1; for k = 2, s = ¼ the boundary is q = 4/3
    let boundary = 1.0 / (2.0 / k as f64 - s);
    let at_boundary = check_admissible(k, s, boundary).admissible;
    let past_boundary = check_admissible(k, s, boundary * (1.0 + 1e-9)).admissible;
    // q = 4 is the boundary of the k = 4 curve at the same s
    let k4_boundary = check_admissible(4, s, 4.0).admissible;
    let ok = alpha_ok && beta_ok && adm && clamp_ok && !at_boundary && past_boundary && !k4_boundary;
    Ok((
        ok,
        format!(
            "α = {alpha}, β = {beta}; K raw {raw:.1} clamped to {} ({}); boundary q = {boundary:.6} rejected: {}, \
             just above accepted: {past_boundary}; (k=4, q=4) rejected: {}",
            row.k_n, row.clamped, !at_boundary, !k4_boundary
        ),
    ))
}

// -------------------------------------------------------------------------

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("MBOLAB_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |c: usize| only.as_ref().is_none_or(|o| o.contains(&c));
    let mut failed = 0;
    let mut report = |c: usize, name: &str, start: Instant, out: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok((true, msg)) => println!("criterion {c}: PASS {name} [{secs:.1}s] {msg}"),
            Ok((false, msg)) => {
                failed += 1;
                println!("criterion {c}: FAIL {name} [{secs:.1}s] {msg}");
            }
            Err(e) => {
                failed += 1;
                println!("criterion {c}: FAIL {name} [{secs:.1}s] error: {e}");
            }
        }
    };

    let simple: [(usize, &str, fn() -> Outcome); 7] = [
        (1, "conservation and monotonicity", conservation),
        (2, "dense exponential oracle", oracle_equivalence),
        (3, "spectral convergence", spectral_convergence),
        (6, "one-step displacement", one_step_displacement),
        (7, "consistency probe", consistency),
        (10, "pinning", pinning),
        (11, "schedule calculus", schedule_calculus),
    ];
    for (c, name, f) in simple {
        if wanted(c) {
            let t = Instant::now();
            report(c, name, t, f());
        }
    }

    let mut traces = Vec::new();
    if wanted(4) || wanted(5) || wanted(12) {
        let t = Instant::now();
        match graph(N_BIG, EPS_BIG, uniform(), 7) {
            Ok(g) => {
                report(4, "shrinking circle", t, shrinking_circle(&g, &mut traces));
                let t = Instant::now();
                report(5, "stationary band", t, stationary_band(&g, &mut traces));
            }
            Err(e) => {
                let msg = format!("graph construction failed: {e}");
                report(4, "shrinking circle", t, Ok((false, msg.clone())));
                report(5, "stationary band", t, Ok((false, msg)));
            }
        }
    }
    if wanted(8) || wanted(12) {
        let t = Instant::now();
        report(8, "weighted drift", t, weighted_drift(&mut traces));
    }
    if wanted(9) {
        let t = Instant::now();
        report(9, "kernel error trend", t, kernel_trend());
    }
    if wanted(12) {
        let t = Instant::now();
        report(12, "energy monotonicity", t, energy_monotonicity(&traces));
    }

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion line(s) failed");
        ExitCode::FAILURE
    }
}
