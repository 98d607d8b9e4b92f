//! `mbolab`: sampling, graph construction, spectra, MBO runs, schedules,
//! studies and figure data from the command line.

mod cache;
mod config;
mod report;
mod scenario;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mbolab::graph::{write_graph, KernelProfile, WeightedGraph};
use mbolab::manifold::{read_point_cloud, sample_points, write_point_cloud, DensitySpec, ManifoldSpec};
use mbolab::schedule::{
    check_admissible, practical_override, schedule_for_n, write_schedule_csv, EpsRule, ScheduleParams,
};

use config::{load_config, parse_set};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mbolab::Error),
    #[error("{0}")]
    Infeasible(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(e.into())
    }
}

impl CliError {
    /// 2 configuration or input error, 3 numerical failure, 4 infeasible
    /// schedule.
    pub fn exit_code(&self) -> u8 {
        use mbolab::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Infeasible(_) => 4,
            Self::Core(e) => match e {
                E::SamplingFailed { .. }
                | E::IsolatedNode(_)
                | E::NonConvergence { .. }
                | E::KrylovFailure(_)
                | E::TruncationTooShort { .. }
                | E::OutOfUnitInterval { .. } => 3,
                _ => 2,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            3 => "numerical",
            4 => "infeasible-schedule",
            _ => "config",
        }
    }

    fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

#[derive(Parser)]
#[command(name = "mbolab", version, about = "Threshold dynamics on random geometric graphs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a point cloud and write it as CSV with a metadata sidecar.
    Sample(SampleArgs),
    /// Build the ε-graph of a point cloud and export edges and degrees.
    BuildGraph(GraphArgs),
    /// Compute (or load from cache) the first K eigenpairs of a graph.
    Spectrum(SpectrumArgs),
    /// Run one configured scenario for every seed.
    Run(ExperimentArgs),
    /// Check exponents and print the (K, h, ε) schedule.
    ValidateSchedule(ScheduleArgs),
    /// Sweep n, seeds, ε, h and K and tabulate every diagnostic.
    Study(ExperimentArgs),
    /// Turn study and run CSVs into figure data and plotting scripts.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ManifoldArg {
    Torus,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Uniform,
    Cosine,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum, default_value = "torus")]
    manifold: ManifoldArg,
    /// Torus side length.
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    density: DensityArg,
    /// Zero-based coordinate axis of the cosine perturbation.
    #[arg(long, default_value_t = 0)]
    axis: usize,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "indicator")]
    kernel: KernelProfile,
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    degrees: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "indicator")]
    kernel: KernelProfile,
    /// Number of eigenpairs.
    #[arg(short = 'K', long = "pairs")]
    k: usize,
    #[arg(long, default_value_t = mbolab::spectral::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, env = "MBOLAB_CACHE", default_value = ".mbolab-cache")]
    cache: PathBuf,
    /// Also write `l,eigenvalue,residual`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set front.radius=0.3`.
    #[arg(long = "set", value_parser = parse_set)]
    sets: Vec<(String, toml::Value)>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Number of eigenpairs; 0 selects the full heat operator.
    #[arg(short = 'K', long = "pairs")]
    k: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, env = "MBOLAB_CACHE")]
    cache: Option<PathBuf>,
    /// Also dump every label of every step.
    #[arg(long)]
    label_dump: bool,
}

impl ExperimentArgs {
    fn overrides(&self) -> Vec<(String, toml::Value)> {
        use toml::Value as V;
        let mut o = self.sets.clone();
        let path = |p: &Path| V::String(p.to_string_lossy().into_owned());
        if let Some(s) = &self.scenario {
            o.push(("scenario".into(), V::String(s.clone())));
        }
        if let Some(n) = self.n {
            o.push(("n".into(), V::Integer(n as i64)));
        }
        if !self.seeds.is_empty() {
            o.push(("seeds".into(), V::Array(self.seeds.iter().map(|&s| V::Integer(s as i64)).collect())));
        }
        if let Some(e) = self.eps {
            o.push(("eps".into(), V::Float(e)));
        }
        if let Some(h) = self.h {
            o.push(("h".into(), V::Float(h)));
        }
        if let Some(k) = self.k {
            o.push(("k".into(), V::Integer(k as i64)));
        }
        if let Some(s) = self.steps {
            o.push(("steps".into(), V::Integer(s as i64)));
        }
        if let Some(p) = &self.output {
            o.push(("output".into(), path(p)));
        }
        if let Some(p) = &self.cache {
            o.push(("cache".into(), path(p)));
        }
        if self.label_dump {
            o.push(("label_dump".into(), V::Boolean(true)));
        }
        o
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EpsRuleArg {
    Theorem,
    LowerRate,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Intrinsic dimension.
    #[arg(short = 'k', default_value_t = 2)]
    k: usize,
    #[arg(short = 's')]
    s: f64,
    #[arg(short = 'q')]
    q: f64,
    /// Sample sizes, comma separated.
    #[arg(short = 'n', value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    c_h: f64,
    #[arg(long, default_value_t = 1.0)]
    c_eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value = "theorem")]
    eps_rule: EpsRuleArg,
    /// Machine CSV only.
    #[arg(long)]
    csv: bool,
    /// Report hand-picked (ε, h, K) against the theoretical inequalities.
    #[arg(long, requires = "override_h")]
    override_eps: Option<f64>,
    #[arg(long, requires = "override_eps")]
    override_h: Option<f64>,
    #[arg(long)]
    override_k: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Wide study CSV (repeatable).
    #[arg(long)]
    study: Vec<PathBuf>,
    /// `radius_*.csv` from shrinking-circle runs (repeatable).
    #[arg(long)]
    radius: Vec<PathBuf>,
    /// Intrinsic dimensions for the parameter-region figure.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    region_k: Vec<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

fn cmd_sample(a: &SampleArgs) -> Result<(), CliError> {
    let m = match a.manifold {
        ManifoldArg::Torus => ManifoldSpec::torus(a.side)?,
        ManifoldArg::Sphere => ManifoldSpec::sphere(),
    };
    let d = match a.density {
        DensityArg::Uniform => DensitySpec::uniform(m),
        DensityArg::Cosine => DensitySpec::cosine(m, a.axis, a.amplitude)?,
    };
    let cloud = sample_points(m, d, a.n, a.seed)?;
    write_point_cloud(&cloud, &a.out)?;
    println!("wrote {} points to {}", cloud.len(), a.out.display());
    Ok(())
}

fn read_graph(points: &Path, eps: f64, kernel: KernelProfile) -> Result<WeightedGraph, CliError> {
    if !points.is_file() {
        return Err(CliError::Config(format!("point cloud {} does not exist", points.display())));
    }
    let cloud = read_point_cloud(points)?;
    Ok(WeightedGraph::build(cloud, eps, kernel)?)
}

fn cmd_build_graph(a: &GraphArgs) -> Result<(), CliError> {
    let g = read_graph(&a.points, a.eps, a.kernel)?;
    write_graph(&g, &a.edges, &a.degrees)?;
    println!(
        "{} nodes, {} edges, {} component(s)",
        g.len(),
        g.edge_count(),
        g.components()
    );
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    let g = read_graph(&a.points, a.eps, a.kernel)?;
    if !(1..=g.len()).contains(&a.k) {
        return Err(CliError::Config(format!("need 1 <= K <= n = {}, got {}", g.len(), a.k)));
    }
    let (dec, event) = cache::cached_spectrum(&g, a.k, a.tol, &a.cache)?;
    let path = cache::cache_path(&a.cache, &event.key);
    println!(
        "{} {} ({} pairs)",
        if event.hit { "cache hit" } else { "computed" },
        path.display(),
        dec.k()
    );
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out).map_err(mbolab::Error::from)?;
        w.write_record(["l", "eigenvalue", "residual"]).map_err(mbolab::Error::from)?;
        for (l, (v, r)) in dec.eigenvalues.iter().zip(&dec.residuals).enumerate() {
            w.write_record([(l + 1).to_string(), format!("{v:?}"), format!("{r:?}")])
                .map_err(mbolab::Error::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, study: bool) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref(), &a.overrides())?;
    let result = if study {
        scenario::run_study(&cfg)
    } else {
        scenario::run_experiment(&cfg)
    };
    match result {
        Ok(m) => {
            let hits = m.runs.iter().filter(|r| r.cache.as_ref().is_some_and(|c| c.hit)).count();
            println!(
                "{} {}: {} run(s), {} cache hit(s), {} artifact(s) in {} (config {})",
                m.command,
                cfg.scenario.name(),
                m.runs.len(),
                hits,
                m.artifacts.len(),
                cfg.output.display(),
                &m.config_hash[..12]
            );
            Ok(())
        }
        Err(e) => {
            // best effort: the record also goes to stderr
            let _ = std::fs::write(
                cfg.output.join("error.json"),
                serde_json::to_string_pretty(&e.record()).unwrap_or_default(),
            );
            Err(e)
        }
    }
}

fn cmd_validate_schedule(a: &ScheduleArgs) -> Result<(), CliError> {
    let params = ScheduleParams {
        k: a.k,
        s: a.s,
        q: a.q,
        c_h: a.c_h,
        c_eps: a.c_eps,
        delta: a.delta,
        eps_rule: match a.eps_rule {
            EpsRuleArg::Theorem => EpsRule::Theorem,
            EpsRuleArg::LowerRate => EpsRule::LowerRate,
        },
    };
    params.validate()?;
    let adm = check_admissible(a.k, a.s, a.q);
    if !adm.admissible {
        return Err(CliError::Infeasible(adm.report));
    }
    let rows = a
        .n
        .iter()
        .map(|&n| schedule_for_n(&params, n))
        .collect::<mbolab::Result<Vec<_>>>()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if a.csv {
        write_schedule_csv(&rows, &mut out)?;
    } else {
        writeln!(out, "{}", adm.report)?;
        if let (Some(al), Some(be)) = (rows[0].alpha, rows[0].beta) {
            writeln!(out, "alpha = {al:.6}, beta = {be:.6}")?;
        }
        writeln!(
            out,
            "{:>10} {:>10} {:>8} {:>12} {:>12} {:>12} {:>12} {:>9} {:>12} {:>12}",
            "n", "K", "clamped", "h", "eps", "eps_lb_thm", "eps_lb_cor", "feasible", "n*eps^(k+4)", "n/ln^2q"
        )?;
        for r in &rows {
            writeln!(
                out,
                "{:>10} {:>10} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9} {:>12.4e} {:>12.4e}",
                r.n,
                r.k_n,
                r.clamped,
                r.h,
                r.eps,
                r.eps_lower_theorem,
                r.eps_lower_corollary,
                r.feasible,
                r.exp_arg_eps,
                r.exp_arg_k.unwrap_or(f64::NAN)
            )?;
        }
        if let (Some(eps), Some(h)) = (a.override_eps, a.override_h) {
            for &n in &a.n {
                let rep = practical_override(a.k, n, eps, h, a.override_k.unwrap_or(n))?;
                writeln!(out, "override at n = {n}: {}", rep.summary())?;
                for c in &rep.checks {
                    writeln!(
                        out,
                        "  [{}] {}: {:.4e} vs {:.4e}",
                        if c.satisfied { "ok" } else { "--" },
                        c.name,
                        c.lhs,
                        c.rhs
                    )?;
                }
            }
        }
    }
    out.flush()?;
    if let Some(r) = rows.iter().find(|r| !r.feasible) {
        return Err(CliError::Infeasible(format!(
            "ε = {:.3e} at n = {} does not exceed the lower bounds ({:.3e}, {:.3e})",
            r.eps, r.n, r.eps_lower_theorem, r.eps_lower_corollary
        )));
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let files = report::write_report(&report::ReportInputs {
        studies: a.study.clone(),
        radius: a.radius.clone(),
        region_dims: a.region_k.clone(),
        output: a.output.clone(),
    })?;
    println!("wrote {} file(s) to {}", files.len(), a.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::BuildGraph(a) => cmd_build_graph(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Run(a) => cmd_experiment(a, false),
        Command::ValidateSchedule(a) => cmd_validate_schedule(a),
        Command::Study(a) => cmd_experiment(a, true),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
