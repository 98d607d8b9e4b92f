//! Experiment configuration: TOML file, `key=value` overrides, validation and
//! resolution of `(ε, h, K)` either explicitly or from a schedule.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use mbolab::front::FrontDescriptor;
use mbolab::graph::KernelProfile;
use mbolab::manifold::{DensitySpec, ManifoldSpec};
use mbolab::schedule::{schedule_for_n, EpsRule, ScheduleParams};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ShrinkingCircle,
    StationaryBand,
    SphereCap,
    DensityDrift,
    HeatError,
    KernelError,
    SpectralReport,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::ShrinkingCircle => "shrinking-circle",
            Self::StationaryBand => "stationary-band",
            Self::SphereCap => "sphere-cap",
            Self::DensityDrift => "density-drift",
            Self::HeatError => "heat-error",
            Self::KernelError => "kernel-error",
            Self::SpectralReport => "spectral-report",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldChoice {
    #[default]
    Torus,
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityChoice {
    #[default]
    Uniform,
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontConfig {
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub axis: usize,
    #[serde(default = "default_band_a")]
    pub a: f64,
    #[serde(default = "default_band_b")]
    pub b: f64,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
}

impl Default for FrontConfig {
    fn default() -> Self {
        Self {
            center: default_center(),
            radius: default_radius(),
            axis: 0,
            a: default_band_a(),
            b: default_band_b(),
            theta0: default_theta0(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_dim")]
    pub k: usize,
    pub s: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub c_h: f64,
    #[serde(default = "one")]
    pub c_eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_eps_rule")]
    pub eps_rule: EpsRule,
}

impl ScheduleConfig {
    pub fn params(&self) -> ScheduleParams {
        ScheduleParams {
            k: self.k,
            s: self.s,
            q: self.q,
            c_h: self.c_h,
            c_eps: self.c_eps,
            delta: self.delta,
            eps_rule: self.eps_rule,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub manifold: ManifoldChoice,
    #[serde(default = "one")]
    pub side: f64,
    #[serde(default)]
    pub density: DensityChoice,
    #[serde(default)]
    pub density_axis: usize,
    #[serde(default = "default_amplitude")]
    pub density_amplitude: f64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelProfile,
    /// Sample size of `run`; a study may give `sweep.n` instead.
    #[serde(default)]
    pub n: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub eps: Option<f64>,
    pub h: Option<f64>,
    /// Number of eigenpairs; absent or 0 selects the full heat operator.
    pub k: Option<usize>,
    pub schedule: Option<ScheduleConfig>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub front: FrontConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Leading eigenvalues compared in `spectral-report`.
    #[serde(default = "default_spectral_count")]
    pub spectral_count: usize,
    #[serde(default)]
    pub label_dump: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_cache")]
    pub cache: PathBuf,
    /// Study sweeps; an absent list means the single resolved value.
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub k: Vec<usize>,
}

fn one() -> f64 {
    1.0
}
fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_radius() -> f64 {
    0.25
}
fn default_band_a() -> f64 {
    0.25
}
fn default_band_b() -> f64 {
    0.75
}
fn default_theta0() -> f64 {
    std::f64::consts::FRAC_PI_3
}
fn default_dim() -> usize {
    2
}
fn default_delta() -> f64 {
    0.1
}
fn default_eps_rule() -> EpsRule {
    EpsRule::Theorem
}
fn default_amplitude() -> f64 {
    0.3
}
fn default_kernel() -> KernelProfile {
    KernelProfile::Indicator
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_steps() -> usize {
    20
}
fn default_tol() -> f64 {
    mbolab::spectral::DEFAULT_TOL
}
fn default_spectral_count() -> usize {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from("mbolab-out")
}
fn default_cache() -> PathBuf {
    PathBuf::from(".mbolab-cache")
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Sets a dotted key such as `front.radius` in `table`.
pub fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("empty override key `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Reads `path` (if any) and applies `key=value` overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        apply_override(&mut table, k, v.clone())?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Splits `key=value`.
pub fn parse_set(s: &str) -> Result<(String, toml::Value), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

/// `(ε, h, K)` for one sample size; `k = 0` means the full operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    pub eps: f64,
    pub h: f64,
    pub k: usize,
}

impl ExperimentConfig {
    pub fn manifold_spec(&self) -> Result<ManifoldSpec, CliError> {
        Ok(match self.manifold {
            ManifoldChoice::Torus => ManifoldSpec::torus(self.side)?,
            ManifoldChoice::Sphere => ManifoldSpec::sphere(),
        })
    }

    pub fn density_spec(&self) -> Result<DensitySpec, CliError> {
        let m = self.manifold_spec()?;
        Ok(match self.density {
            DensityChoice::Uniform => DensitySpec::uniform(m),
            DensityChoice::Cosine => DensitySpec::cosine(m, self.density_axis, self.density_amplitude)?,
        })
    }

    /// Initial region of the scenario.
    pub fn front_spec(&self) -> Result<FrontDescriptor, CliError> {
        let m = self.manifold_spec()?;
        let f = &self.front;
        Ok(match self.scenario {
            Scenario::SphereCap => FrontDescriptor::cap(f.theta0)?,
            Scenario::StationaryBand | Scenario::DensityDrift => FrontDescriptor::band(m, f.axis, f.a, f.b)?,
            _ if matches!(m, ManifoldSpec::Sphere) => FrontDescriptor::cap(f.theta0)?,
            _ => FrontDescriptor::circle(m, f.center, f.radius)?,
        })
    }

    pub fn resolve(&self, n: usize) -> Result<Resolved, CliError> {
        let sched = match &self.schedule {
            Some(s) if self.eps.is_none() || self.h.is_none() || self.k.is_none() => {
                Some(schedule_for_n(&s.params(), n)?)
            }
            _ => None,
        };
        let missing = |name: &str| CliError::Config(format!("`{name}` is required when no [schedule] is given"));
        let eps = match (self.eps, &sched) {
            (Some(e), _) => e,
            (None, Some(s)) => s.eps,
            (None, None) => return Err(missing("eps")),
        };
        let h = match (self.h, &sched) {
            (Some(h), _) => h,
            (None, Some(s)) => s.h,
            (None, None) => return Err(missing("h")),
        };
        let k = match (self.k, &sched) {
            (Some(k), _) => k,
            (None, Some(s)) => s.k_n,
            (None, None) => 0,
        };
        Ok(Resolved { eps, h, k })
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        if self.sweep.n.is_empty() {
            vec![self.n]
        } else {
            self.sweep.n.clone()
        }
    }

    /// Checks everything that can be checked before any computation and
    /// creates the output and cache directories.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n == 0 && self.sweep.n.is_empty() {
            return bad("`n` (or `sweep.n` for a study) is required".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        let m = self.manifold_spec()?;
        self.density_spec()?;
        self.front_spec()?;
        match (self.scenario, m) {
            (Scenario::SphereCap, ManifoldSpec::FlatTorus { .. }) => {
                return bad("sphere-cap needs manifold = \"sphere\"".into())
            }
            (
                Scenario::ShrinkingCircle | Scenario::StationaryBand | Scenario::DensityDrift,
                ManifoldSpec::Sphere,
            ) => return bad(format!("{} needs manifold = \"torus\"", self.scenario.name())),
            _ => {}
        }
        if self.scenario == Scenario::DensityDrift {
            if self.density != DensityChoice::Cosine {
                return bad("density-drift needs density = \"cosine\"".into());
            }
            if self.front.axis != self.density_axis {
                return bad("density-drift needs front.axis = density_axis".into());
            }
        }
        if matches!(
            self.scenario,
            Scenario::ShrinkingCircle | Scenario::StationaryBand | Scenario::SphereCap
        ) && self.density != DensityChoice::Uniform
        {
            return bad(format!("{} has a closed-form reference only for density = \"uniform\"", self.scenario.name()));
        }
        if let Some(s) = &self.schedule {
            s.params().validate()?;
        }
        for n in self.sample_sizes() {
            if n < 3 {
                return bad(format!("n must be at least 3, got {n}"));
            }
            let r = self.resolve(n)?;
            let eps_list = if self.sweep.eps.is_empty() { vec![r.eps] } else { self.sweep.eps.clone() };
            let h_list = if self.sweep.h.is_empty() { vec![r.h] } else { self.sweep.h.clone() };
            let k_list = if self.sweep.k.is_empty() { vec![r.k] } else { self.sweep.k.clone() };
            if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                return bad(format!("eps must be positive, got {e}"));
            }
            if let Some(h) = h_list.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
                return bad(format!("h must be positive, got {h}"));
            }
            if let Some(k) = k_list.iter().find(|k| **k > n) {
                return bad(format!("K = {k} exceeds n = {n}"));
            }
            if self.scenario == Scenario::KernelError && k_list.contains(&0) {
                return bad("kernel-error needs K >= 1".into());
            }
            if self.scenario == Scenario::SpectralReport {
                let need = k_list.iter().copied().filter(|&k| k > 0).min().unwrap_or(self.spectral_count);
                if self.spectral_count == 0 || self.spectral_count > need.max(1) || self.spectral_count > n {
                    return bad(format!(
                        "spectral_count = {} must lie in 1..=K (K = {need})",
                        self.spectral_count
                    ));
                }
            }
        }
        for dir in [&self.output, &self.cache] {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, output locations excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        c.cache = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
