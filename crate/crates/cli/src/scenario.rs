//! Scenario runs and parameter studies, with their artifacts and manifest.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use mbolab::continuum::{analytic_front, drift_front_ode, FrontState};
use mbolab::diagnostics::{
    convergence_study, default_collar, front_error, heat_approx_error, kernel_sup_error, max_principle_error,
    spectral_convergence_report, write_study_csv, write_study_long_csv, KernelCheckMode, StudyRun, StudyScenario,
    TestFunction,
};
use mbolab::front::{FrontDescriptor, FrontKind};
use mbolab::graph::{kernel_constants, WeightedGraph};
use mbolab::manifold::{sample_points, DensityForm, DensitySpec, ManifoldSpec};
use mbolab::mbo::{initial_state_from_region, run_mbo, MboTrace};
use mbolab::spectral::HeatOperator;
use mbolab::util::linear_fit;

use crate::cache::{cached_spectrum, CacheEvent};
use crate::config::{hex, ExperimentConfig, Resolved, Scenario};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub n: usize,
    pub eps: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub seconds: f64,
    pub cache: Option<CacheEvent>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

/// Run manifest; everything except the wall times is a function of the
/// configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub artifacts: Vec<Artifact>,
    pub total_seconds: f64,
}

struct SeedOutput {
    record: RunRecord,
    files: Vec<String>,
    summary: Vec<(&'static str, String)>,
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(mbolab::Error::from)?;
    w.write_record(header).map_err(mbolab::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(mbolab::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Mass of the band `{a ≤ x_axis ≤ b}` under the density.
fn band_mass(density: &DensitySpec, axis: usize, a: f64, b: f64) -> f64 {
    let side = density.manifold.side().unwrap_or(1.0);
    let base = (b - a) / side;
    match density.form {
        DensityForm::CosinePerturbed { axis: da, amplitude } if da == axis => {
            let w = 2.0 * PI / side;
            base + amplitude * ((w * b).sin() - (w * a).sin()) / (w * side)
        }
        _ => base,
    }
}

type Flow = Box<dyn Fn(f64) -> mbolab::Result<FrontState>>;

fn reference_flow(front: FrontDescriptor, density: DensitySpec, kappa: f64) -> Flow {
    if density.is_uniform() {
        return Box::new(move |t| analytic_front(&front, &density, kappa, t));
    }
    Box::new(move |t| match front.kind {
        FrontKind::Band { axis, a, b } => {
            let at = drift_front_ode(a, &density, kappa, t)?;
            let bt = drift_front_ode(b, &density, kappa, t)?;
            if bt <= at {
                Ok(FrontState::Extinct)
            } else {
                Ok(FrontState::Alive(FrontDescriptor::band(front.manifold, axis, at, bt)?))
            }
        }
        _ => Err(mbolab::Error::Unsupported(
            "non-uniform references exist only for flat bands".into(),
        )),
    })
}

fn front_scenario(
    cfg: &ExperimentConfig,
    graph: &WeightedGraph,
    handle: &HeatOperator,
    r: Resolved,
    kappa: f64,
    tag: &str,
    files: &mut Vec<String>,
    summary: &mut Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let density = graph.cloud.density;
    let front = cfg.front_spec()?;
    let chi0 = initial_state_from_region(&graph.cloud, &front);
    let trace = run_mbo(handle, r.h, chi0, cfg.steps, false)?;
    let out = &cfg.output;
    let name = format!("trace_{tag}.csv");
    trace.write_csv(&out.join(&name))?;
    files.push(name);
    if cfg.label_dump {
        let name = format!("labels_{tag}.csv");
        trace.write_labels_csv(&out.join(&name))?;
        files.push(name);
    }

    let flow = reference_flow(front, density, kappa);
    let times: Vec<f64> = (0..trace.len()).map(|l| trace.time(l)).collect();
    let fe = front_error(&trace, &graph.cloud, flow.as_ref(), &times, default_collar(r.eps, r.h))?;
    let rows: Vec<Vec<String>> = fe
        .rows
        .iter()
        .enumerate()
        .map(|(l, row)| {
            vec![
                l.to_string(),
                fmt(row.t),
                fmt(row.disagreement),
                fmt(row.max_wrong_distance),
                row.reference_extinct.to_string(),
            ]
        })
        .collect();
    let name = format!("front_error_{tag}.csv");
    write_table(
        &out.join(&name),
        &["step", "time", "disagreement", "max_wrong_distance", "reference_extinct"],
        &rows,
    )?;
    files.push(name);

    let max_dis = fe.rows.iter().fold(0.0f64, |m, r| m.max(r.disagreement));
    summary.push(("max_disagreement", fmt(max_dis)));
    summary.push(("extinction_time", fmt_opt(fe.extinction_estimate)));
    summary.push((
        "extinction_reference",
        fmt_opt(mbolab::continuum::extinction_time(&front, kappa).filter(|_| density.is_uniform())),
    ));
    summary.push(("max_energy_increase", fmt_opt(trace.max_energy_increase())));
    summary.push(("pinned_at", trace.pinned_at.map(|p| p.to_string()).unwrap_or_default()));

    match front.kind {
        FrontKind::Circle { radius, .. } => {
            circle_outputs(&trace, &graph.cloud.manifold, radius, kappa, tag, out, files, summary)?
        }
        FrontKind::Cap { theta0 } => {
            let n = trace.states[0].len() as f64;
            let rows: Vec<Vec<String>> = trace
                .states
                .iter()
                .enumerate()
                .map(|(l, s)| {
                    let t = trace.time(l);
                    let area = s.ones_count() as f64 / n * 4.0 * PI;
                    vec![
                        l.to_string(),
                        fmt(t),
                        fmt(1.0 - area / (2.0 * PI)),
                        fmt((theta0.cos() * (kappa * t).exp()).min(1.0)),
                    ]
                })
                .collect();
            let name = format!("cap_{tag}.csv");
            write_table(&out.join(&name), &["step", "time", "cos_theta_graph", "cos_theta_reference"], &rows)?;
            files.push(name);
        }
        FrontKind::Band { axis, .. } if !density.is_uniform() => {
            let n = trace.states[0].len() as f64;
            let mut rows = Vec::with_capacity(trace.len());
            for (l, s) in trace.states.iter().enumerate() {
                let t = trace.time(l);
                let (mass_ref, a, b) = match flow(t)? {
                    FrontState::Alive(FrontDescriptor {
                        kind: FrontKind::Band { a, b, .. },
                        ..
                    }) => (band_mass(&density, axis, a, b), fmt(a), fmt(b)),
                    _ => (0.0, String::new(), String::new()),
                };
                rows.push(vec![
                    l.to_string(),
                    fmt(t),
                    fmt(s.ones_count() as f64 / n),
                    fmt(mass_ref),
                    a,
                    b,
                ]);
            }
            let name = format!("mass_{tag}.csv");
            write_table(
                &out.join(&name),
                &["step", "time", "mass_graph", "mass_reference", "a_reference", "b_reference"],
                &rows,
            )?;
            files.push(name);
        }
        _ => {}
    }
    Ok(())
}

/// `radius_<tag>.csv` with `r²` read off the labelled area, and the slope of
/// `r²(t)` over the first half-life.
#[allow(clippy::too_many_arguments)]
fn circle_outputs(
    trace: &MboTrace,
    manifold: &ManifoldSpec,
    r0: f64,
    kappa: f64,
    tag: &str,
    out: &Path,
    files: &mut Vec<String>,
    summary: &mut Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let n = trace.states[0].len() as f64;
    let vol = manifold.volume();
    let mut rows = Vec::with_capacity(trace.len());
    let (mut ts, mut r2s) = (Vec::new(), Vec::new());
    let half_life = r0 * r0 / (4.0 * kappa);
    for (l, s) in trace.states.iter().enumerate() {
        let t = trace.time(l);
        let r2 = s.ones_count() as f64 / n * vol / PI;
        if t <= half_life {
            ts.push(t);
            r2s.push(r2);
        }
        rows.push(vec![l.to_string(), fmt(t), fmt(r2), fmt((r0 * r0 - 2.0 * kappa * t).max(0.0))]);
    }
    let name = format!("radius_{tag}.csv");
    write_table(&out.join(&name), &["step", "time", "r2_graph", "r2_reference"], &rows)?;
    files.push(name);
    let slope = (ts.len() >= 2).then(|| linear_fit(&ts, &r2s).0);
    summary.push(("r2_slope", fmt_opt(slope)));
    summary.push(("r2_slope_reference", fmt(-2.0 * kappa)));
    Ok(())
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, r: Resolved) -> Result<SeedOutput, CliError> {
    let start = Instant::now();
    let density = cfg.density_spec()?;
    let manifold = density.manifold;
    let cloud = sample_points(manifold, density, cfg.n, seed)?;
    let graph = WeightedGraph::build(cloud, r.eps, cfg.kernel)?;
    let kappa = kernel_constants(cfg.kernel, manifold.intrinsic_dim())?.kappa;
    let k = match (cfg.scenario, r.k) {
        (Scenario::SpectralReport, 0) => cfg.spectral_count,
        (_, k) => k,
    };
    let (dec, cache) = if k > 0 {
        let (d, e) = cached_spectrum(&graph, k, cfg.tol, &cfg.cache)?;
        (Some(d), Some(e))
    } else {
        (None, None)
    };
    let handle = match &dec {
        Some(d) => HeatOperator::truncated(d),
        None => HeatOperator::full(&graph)?,
    };
    let tag = format!("seed{seed}");
    let out = &cfg.output;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    match cfg.scenario {
        Scenario::ShrinkingCircle | Scenario::StationaryBand | Scenario::SphereCap | Scenario::DensityDrift => {
            front_scenario(cfg, &graph, &handle, r, kappa, &tag, &mut files, &mut summary)?
        }
        Scenario::HeatError => {
            let tests = TestFunction::standard_set(manifold);
            let rep = heat_approx_error(&handle, &graph.cloud, &density, r.h, kappa, &tests)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|row| vec![row.name.clone(), fmt(row.sup), fmt(row.lipschitz), fmt(row.error)])
                .collect();
            let name = format!("heat_error_{tag}.csv");
            write_table(&out.join(&name), &["function", "sup", "lipschitz", "error"], &rows)?;
            files.push(name);
            let mp = max_principle_error(&handle, r.h, 4, seed)?;
            summary.extend([
                ("fit_sup", fmt(rep.fit_sup)),
                ("fit_lip", fmt(rep.fit_lip)),
                ("fit_sup_normalized", fmt(rep.fit_sup_normalized)),
                ("fit_lip_normalized", fmt(rep.fit_lip_normalized)),
                ("fit_condition", fmt(rep.fit_condition)),
                ("mass_defect", fmt(handle.mass_defect(r.h)?)),
                ("max_principle_error", fmt(mp.error)),
                ("max_principle_ratio", fmt(mp.ratio)),
            ]);
        }
        Scenario::KernelError => {
            let d = dec.as_ref().expect("validated K >= 1");
            let rep = kernel_sup_error(d, &graph.cloud, r.h, kappa, &density, KernelCheckMode::Auto)?;
            summary.extend([
                ("sup_error", fmt(rep.sup_error)),
                ("normalized", fmt(rep.normalized)),
                ("pairs_checked", rep.pairs_checked.to_string()),
                ("exhaustive", rep.exhaustive.to_string()),
            ]);
        }
        Scenario::SpectralReport => {
            let d = dec.as_ref().expect("K chosen above");
            let rep = spectral_convergence_report(d, &graph.cloud, &density, kappa, cfg.spectral_count)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|row| {
                    vec![row.l.to_string(), fmt(row.graph), fmt(row.continuum), fmt(row.abs_error), fmt(row.scaled)]
                })
                .collect();
            let name = format!("eigenvalues_{tag}.csv");
            write_table(&out.join(&name), &["l", "graph", "continuum", "abs_error", "scaled"], &rows)?;
            files.push(name);
            let rows: Vec<Vec<String>> = rep
                .groups
                .iter()
                .map(|g| vec![fmt(g.eigenvalue), g.first.to_string(), g.last.to_string(), fmt(g.max_angle_deg)])
                .collect();
            let name = format!("eigenspaces_{tag}.csv");
            write_table(&out.join(&name), &["eigenvalue", "first", "last", "max_angle_deg"], &rows)?;
            files.push(name);
            let worst = rep.groups.iter().fold(0.0f64, |m, g| m.max(g.max_angle_deg));
            summary.push(("max_angle_deg", fmt(worst)));
        }
    }
    Ok(SeedOutput {
        record: RunRecord {
            seed,
            n: cfg.n,
            eps: r.eps,
            h: r.h,
            k,
            seconds: start.elapsed().as_secs_f64(),
            cache,
        },
        files,
        summary,
    })
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(hex(&Sha256::digest(std::fs::read(path)?)))
}

fn finish(
    command: &str,
    cfg: &ExperimentConfig,
    runs: Vec<RunRecord>,
    files: Vec<String>,
    start: Instant,
) -> Result<Manifest, CliError> {
    let artifacts = files
        .into_iter()
        .map(|f| {
            Ok(Artifact {
                sha256: sha256_file(&cfg.output.join(&f))?,
                file: f,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = Manifest {
        command: command.to_string(),
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        runs,
        artifacts,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(
        cfg.output.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(mbolab::Error::from)?,
    )?;
    Ok(manifest)
}

/// Runs the configured scenario once per seed, seeds in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let start = Instant::now();
    if cfg.n == 0 {
        return Err(CliError::Config("`run` needs `n`".into()));
    }
    let r = cfg.resolve(cfg.n)?;
    let outputs = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed, r))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut header = vec!["seed"];
    header.extend(outputs[0].summary.iter().map(|(k, _)| *k));
    let mut rows = Vec::new();
    for o in outputs {
        let mut row = vec![o.record.seed.to_string()];
        row.extend(o.summary.into_iter().map(|(_, v)| v));
        rows.push(row);
        files.extend(o.files);
        runs.push(o.record);
    }
    write_table(&cfg.output.join("summary.csv"), &header, &rows)?;
    files.push("summary.csv".into());
    finish("run", cfg, runs, files, start)
}

/// Cartesian sweep over `n × seeds × ε × h × K`; failures are recorded per
/// row of `study.csv`.
pub fn run_study(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let mut runs = Vec::new();
    for n in cfg.sample_sizes() {
        let r = cfg.resolve(n)?;
        let pick = |sweep: &Vec<f64>, v: f64| if sweep.is_empty() { vec![v] } else { sweep.clone() };
        let ks = if cfg.sweep.k.is_empty() { vec![r.k] } else { cfg.sweep.k.clone() };
        for &seed in &cfg.seeds {
            for &eps in &pick(&cfg.sweep.eps, r.eps) {
                for &h in &pick(&cfg.sweep.h, r.h) {
                    for &k in &ks {
                        runs.push(StudyRun { n, seed, eps, h, k });
                    }
                }
            }
        }
    }
    let scenario = StudyScenario {
        density: cfg.density_spec()?,
        kernel: cfg.kernel,
        front: cfg.front_spec()?,
        mbo_steps: cfg.steps,
    };
    let rows = convergence_study(&scenario, &runs);
    for r in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("study row {:?} failed: {}", r.run, r.error.as_deref().unwrap_or(""));
    }
    let wide = std::fs::File::create(cfg.output.join("study.csv"))?;
    write_study_csv(&rows, wide)?;
    let long = std::fs::File::create(cfg.output.join("study_long.csv"))?;
    write_study_long_csv(&rows, long)?;
    let records = rows
        .iter()
        .map(|r| RunRecord {
            seed: r.run.seed,
            n: r.run.n,
            eps: r.run.eps,
            h: r.run.h,
            k: r.run.k,
            seconds: r.seconds,
            cache: None,
        })
        .collect();
    finish("study", cfg, records, vec!["study.csv".into(), "study_long.csv".into()], start)
}
