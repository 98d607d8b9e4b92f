//! Parameter sweeps running every diagnostic per `(n, seed, ε, h, K)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

use super::{
    default_collar, degree_density_error, front_error, heat_approx_error, kernel_sup_error, max_principle_error,
    KernelCheckMode, TestFunction,
};
use crate::continuum::analytic_front;
use crate::error::{Error, Result};
use crate::front::FrontDescriptor;
use crate::graph::{kernel_constants, KernelProfile, WeightedGraph};
use crate::manifold::{sample_points, DensitySpec};
use crate::mbo::{initial_state_from_region, run_mbo};
use crate::spectral::{partial_eigendecomposition, EigenOptions, HeatOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyScenario {
    pub density: DensitySpec,
    pub kernel: KernelProfile,
    pub front: FrontDescriptor,
    pub mbo_steps: usize,
}

/// One point of a sweep; `k = 0` selects the full heat operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRun {
    pub n: usize,
    pub seed: u64,
    pub eps: f64,
    pub h: f64,
    pub k: usize,
}

pub const STUDY_METRICS: [&str; 9] = [
    "degree_error",
    "max_principle_error",
    "mass_defect",
    "kernel_sup_error",
    "kernel_normalized",
    "lambda2_scaled",
    "heat_error_max",
    "front_disagreement",
    "extinction_time",
];

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub run: StudyRun,
    /// Values in the order of [`STUDY_METRICS`]; `None` when not applicable.
    pub metrics: Vec<Option<f64>>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl StudyRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        let i = STUDY_METRICS.iter().position(|m| *m == name)?;
        self.metrics[i]
    }
}

fn not_applicable<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Unsupported(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_one(scenario: &StudyScenario, run: &StudyRun) -> Result<Vec<Option<f64>>> {
    let manifold = scenario.density.manifold;
    let cloud = sample_points(manifold, scenario.density, run.n, run.seed)?;
    let graph = WeightedGraph::build(cloud, run.eps, scenario.kernel)?;
    let kappa = kernel_constants(scenario.kernel, manifold.intrinsic_dim())?.kappa;
    let mut m = vec![None; STUDY_METRICS.len()];
    m[0] = Some(degree_density_error(&graph, &scenario.density)?);

    let dec = if run.k > 0 {
        Some(partial_eigendecomposition(&graph, run.k, &EigenOptions::default())?)
    } else {
        None
    };
    let handle = match &dec {
        Some(d) => HeatOperator::truncated(d),
        None => HeatOperator::full(&graph)?,
    };
    m[1] = Some(max_principle_error(&handle, run.h, 2, run.seed)?.error);
    m[2] = Some(handle.mass_defect(run.h)?);
    if let Some(d) = &dec {
        if let Some(r) = not_applicable(kernel_sup_error(
            d,
            &graph.cloud,
            run.h,
            kappa,
            &scenario.density,
            KernelCheckMode::Auto,
        ))? {
            m[3] = Some(r.sup_error);
            m[4] = Some(r.normalized);
        }
        if d.k() >= 2 {
            m[5] = Some(d.eigenvalues[1] / kappa);
        }
    }
    if m[5].is_none() && scenario.density.is_uniform() {
        // full operator: compare the first nonzero eigenvalue via a small solve
        let d = partial_eigendecomposition(&graph, 2, &EigenOptions::default())?;
        m[5] = Some(d.eigenvalues[1] / kappa);
    }
    let tests = TestFunction::standard_set(manifold);
    if let Some(r) = not_applicable(heat_approx_error(&handle, &graph.cloud, &scenario.density, run.h, kappa, &tests))? {
        m[6] = Some(r.rows.iter().fold(0.0f64, |a, row| a.max(row.error)));
    }
    if scenario.mbo_steps > 0 {
        let chi0 = initial_state_from_region(&graph.cloud, &scenario.front);
        let trace = run_mbo(&handle, run.h, chi0, scenario.mbo_steps, false)?;
        if scenario.density.is_uniform() {
            let flow = |t: f64| analytic_front(&scenario.front, &scenario.density, kappa, t);
            let t_end = trace.time(trace.len() - 1);
            let fe = front_error(&trace, &graph.cloud, &flow, &[t_end], default_collar(run.eps, run.h))?;
            m[7] = Some(fe.rows[0].disagreement);
        }
        m[8] = trace.extinction_time();
    }
    Ok(m)
}

/// Runs every diagnostic for each sweep point, in parallel. Failures are
/// recorded per row and do not stop the sweep.
pub fn convergence_study(scenario: &StudyScenario, runs: &[StudyRun]) -> Vec<StudyRow> {
    runs.par_iter()
        .map(|run| {
            let start = Instant::now();
            let (metrics, error) = match run_one(scenario, run) {
                Ok(m) => (m, None),
                Err(e) => (vec![None; STUDY_METRICS.len()], Some(e.to_string())),
            };
            StudyRow {
                run: *run,
                metrics,
                seconds: start.elapsed().as_secs_f64(),
                error,
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Wide format: `n,seed,eps,h,K,<metrics…>,error`. Wall times are left out
/// so that reruns are byte-identical.
pub fn write_study_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n", "seed", "eps", "h", "K"];
    header.extend(STUDY_METRICS);
    header.push("error");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.run.n.to_string(),
            r.run.seed.to_string(),
            format!("{:?}", r.run.eps),
            format!("{:?}", r.run.h),
            r.run.k.to_string(),
        ];
        rec.extend(r.metrics.iter().map(|v| cell(*v)));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format for plotting: `metric,n,eps,h,K,seed,value`.
pub fn write_study_long_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "n", "eps", "h", "K", "seed", "value"])?;
    for r in rows {
        for (name, v) in STUDY_METRICS.iter().zip(&r.metrics) {
            if let Some(v) = v {
                w.write_record([
                    name.to_string(),
                    r.run.n.to_string(),
                    format!("{:?}", r.run.eps),
                    format!("{:?}", r.run.h),
                    r.run.k.to_string(),
                    r.run.seed.to_string(),
                    format!("{v:?}"),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;

    fn scenario() -> StudyScenario {
        let m = ManifoldSpec::unit_torus();
        StudyScenario {
            density: DensitySpec::uniform(m),
            kernel: KernelProfile::Indicator,
            front: FrontDescriptor::circle(m, [0.5, 0.5], 0.25).unwrap(),
            mbo_steps: 3,
        }
    }

    #[test]
    fn empty_sweep_has_header_only() {
        let rows = convergence_study(&scenario(), &[]);
        let mut buf = Vec::new();
        write_study_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("n,seed,eps,h,K,degree_error,"));
    }

    #[test]
    fn seeds_change_values_not_schema() {
        let runs = [
            StudyRun { n: 400, seed: 1, eps: 0.15, h: 0.02, k: 20 },
            StudyRun { n: 400, seed: 2, eps: 0.15, h: 0.02, k: 20 },
        ];
        let rows = convergence_study(&scenario(), &runs);
        assert!(rows.iter().all(|r| r.error.is_none()), "{rows:?}");
        assert!(rows.iter().all(|r| r.metrics.iter().take(8).all(|v| v.is_some())));
        assert_ne!(rows[0].metrics[0], rows[1].metrics[0]);
        // deterministic
        let again = convergence_study(&scenario(), &runs[..1]);
        assert_eq!(again[0].metrics, rows[0].metrics);
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let runs = [
            StudyRun { n: 100, seed: 1, eps: 0.9, h: 0.02, k: 5 },
            StudyRun { n: 100, seed: 1, eps: 0.3, h: 0.02, k: 5 },
        ];
        let rows = convergence_study(&scenario(), &runs);
        assert!(rows[0].error.is_some());
        assert!(rows[1].error.is_none());
        let mut buf = Vec::new();
        write_study_long_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("metric,n,eps,h,K,seed,value\n"));
    }
}
