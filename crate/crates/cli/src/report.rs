//! Figure data and generated matplotlib scripts from study and run CSVs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mbolab::diagnostics::STUDY_METRICS;
use mbolab::util::{linear_fit, median};

use crate::CliError;

pub struct ReportInputs {
    pub studies: Vec<PathBuf>,
    pub radius: Vec<PathBuf>,
    pub region_dims: Vec<usize>,
    pub output: PathBuf,
}

/// Reads `path`, checking that every `required` column is present. Returns
/// the header and the rows.
fn read_table(path: &Path, required: &[&str]) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(mbolab::Error::from)?;
    let header = r.headers().map_err(mbolab::Error::from)?.clone();
    for name in required {
        if !header.iter().any(|c| c == *name) {
            return Err(mbolab::Error::MissingColumn(format!("{name}` in `{}", path.display())).into());
        }
    }
    let rows = r
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(mbolab::Error::from)?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str) -> usize {
    header.iter().position(|c| c == name).expect("checked by read_table")
}

fn parse(v: &str) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        v.parse().ok()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(mbolab::Error::from)?;
    w.write_record(header).map_err(mbolab::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(mbolab::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// `metric,n,median,count` over every seed and parameter of each sample size.
fn error_vs_n(studies: &[PathBuf]) -> Result<Vec<Vec<String>>, CliError> {
    let mut required = vec!["n", "seed", "eps", "h", "K"];
    required.extend(STUDY_METRICS);
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for path in studies {
        let (header, rows) = read_table(path, &required)?;
        let n_col = column(&header, "n");
        for row in &rows {
            let n: usize = row[n_col]
                .parse()
                .map_err(|_| CliError::Config(format!("{}: bad n `{}`", path.display(), &row[n_col])))?;
            for (mi, metric) in STUDY_METRICS.iter().enumerate() {
                if let Some(v) = parse(&row[column(&header, metric)]).filter(|v| v.is_finite()) {
                    groups.entry((mi, n)).or_default().push(v);
                }
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|((mi, n), vals)| {
            vec![
                STUDY_METRICS[mi].to_string(),
                n.to_string(),
                format!("{:?}", median(&vals)),
                vals.len().to_string(),
            ]
        })
        .collect())
}

/// Per source file: the `r²` samples and the least-squares slope over the
/// part of the run where `r²` is still above half its initial value.
fn radius_data(files: &[PathBuf]) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>), CliError> {
    let mut samples = Vec::new();
    let mut fits = Vec::new();
    for path in files {
        let (header, rows) = read_table(path, &["time", "r2_graph"])?;
        let (tc, rc) = (column(&header, "time"), column(&header, "r2_graph"));
        let refc = header.iter().position(|c| c == "r2_reference");
        let source = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut pts = Vec::new();
        for row in &rows {
            let (Some(t), Some(r2)) = (parse(&row[tc]), parse(&row[rc])) else {
                continue;
            };
            let reference = refc.map(|c| row[c].to_string()).unwrap_or_default();
            samples.push(vec![source.clone(), format!("{t:?}"), format!("{r2:?}"), reference]);
            pts.push((t, r2));
        }
        if let Some(&(_, r0)) = pts.first() {
            let (ts, rs): (Vec<f64>, Vec<f64>) = pts.iter().copied().filter(|&(_, r)| r >= 0.5 * r0).unzip();
            if ts.len() >= 2 {
                let (slope, intercept) = linear_fit(&ts, &rs);
                fits.push(vec![source.clone(), format!("{slope:?}"), format!("{intercept:?}"), ts.len().to_string()]);
            }
        }
    }
    Ok((samples, fits))
}

/// Samples of the admissibility boundary `q = 1 / (2/k − s)` for `s ∈ [0, 2/k)`.
fn region_samples(k: usize) -> Vec<Vec<String>> {
    let top = 2.0 / k as f64;
    let count = 200;
    (0..count)
        .map(|i| {
            let s = top * i as f64 / count as f64;
            vec![format!("{s:?}"), format!("{:?}", 1.0 / (top - s))]
        })
        .collect()
}

const ERROR_SCRIPT: &str = r#"import csv, collections
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

series = collections.defaultdict(list)
with open("error_vs_n.csv") as f:
    for row in csv.DictReader(f):
        v = float(row["median"])
        if v > 0:
            series[row["metric"]].append((int(row["n"]), v))

fig, ax = plt.subplots()
for metric, pts in sorted(series.items()):
    pts.sort()
    ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=metric)
ax.set_xlabel("n")
ax.set_ylabel("median over seeds")
if series:
    ax.legend(fontsize="small")
fig.savefig("error_vs_n.png", dpi=150)
"#;

const RADIUS_SCRIPT: &str = r#"import csv, collections
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

series = collections.defaultdict(list)
with open("radius_vs_time.csv") as f:
    for row in csv.DictReader(f):
        series[row["source"]].append((float(row["time"]), float(row["r2_graph"]), row["r2_reference"]))
fits = {}
with open("radius_fit.csv") as f:
    for row in csv.DictReader(f):
        fits[row["source"]] = float(row["slope"])

fig, ax = plt.subplots()
for source, pts in sorted(series.items()):
    label = source
    if source in fits:
        label += " (slope %.4g)" % fits[source]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], ".-", label=label)
    ref = [(p[0], float(p[2])) for p in pts if p[2]]
    if ref:
        ax.plot([p[0] for p in ref], [p[1] for p in ref], "k--", lw=0.8)
ax.set_xlabel("t")
ax.set_ylabel("r^2")
if series:
    ax.legend(fontsize="small")
fig.savefig("radius_vs_time.png", dpi=150)
"#;

const REGION_SCRIPT: &str = r#"import csv, glob
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

QMAX = 20.0
fig, ax = plt.subplots()
for path in sorted(glob.glob("region_k*.csv")):
    k = path[len("region_k"):-len(".csv")]
    with open(path) as f:
        pts = [(float(r["s"]), float(r["q_min"])) for r in csv.DictReader(f)]
    pts = [(s, q) for s, q in pts if q < QMAX]
    s = [p[0] for p in pts]
    q = [p[1] for p in pts]
    ax.plot(s, q, label="k = " + k)
    ax.fill_between(s, q, QMAX, alpha=0.2)
ax.set_xlabel("s")
ax.set_ylabel("q")
ax.set_ylim(0, QMAX)
ax.set_title("Parameter space")
ax.legend()
fig.savefig("parameter_region.png", dpi=150)
"#;

/// Writes the figure data and one plotting script per figure. Returns the
/// names of the files written.
pub fn write_report(inputs: &ReportInputs) -> Result<Vec<String>, CliError> {
    let out = &inputs.output;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    for p in inputs.studies.iter().chain(&inputs.radius) {
        if !p.is_file() {
            return Err(CliError::Config(format!("input {} does not exist", p.display())));
        }
    }
    if let Some(k) = inputs.region_dims.iter().find(|k| !(1..=3).contains(*k)) {
        return Err(CliError::Config(format!("region dimension must be 1..=3, got {k}")));
    }
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: &[Vec<String>]| -> Result<(), CliError> {
        write_csv(&out.join(name), header, rows)?;
        written.push(name.to_string());
        Ok(())
    };

    emit("error_vs_n.csv", &["metric", "n", "median", "count"], &error_vs_n(&inputs.studies)?)?;
    let (samples, fits) = radius_data(&inputs.radius)?;
    emit("radius_vs_time.csv", &["source", "time", "r2_graph", "r2_reference"], &samples)?;
    emit("radius_fit.csv", &["source", "slope", "intercept", "points"], &fits)?;
    for &k in &inputs.region_dims {
        emit(&format!("region_k{k}.csv"), &["s", "q_min"], &region_samples(k))?;
    }
    for (name, body) in [
        ("plot_error_vs_n.py", ERROR_SCRIPT),
        ("plot_radius_vs_time.py", RADIUS_SCRIPT),
        ("plot_parameter_region.py", REGION_SCRIPT),
    ] {
        std::fs::write(out.join(name), body)?;
        written.push(name.to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_boundary_matches_formula() {
        let rows = region_samples(2);
        // s = 0.25 sits at index 50 of 200 samples over [0, 1)
        assert_eq!(rows[50][0], "0.25");
        let q: f64 = rows[50][1].parse().unwrap();
        assert!((q - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radius_fit_recovers_linear_decay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("radius_seed1.csv");
        let mut text = String::from("step,time,r2_graph,r2_reference\n");
        for l in 0..20 {
            let t = 0.01 * l as f64;
            text += &format!("{l},{t},{},\n", 0.0625 - 0.25 * t);
        }
        std::fs::write(&path, text).unwrap();
        let (samples, fits) = radius_data(&[path]).unwrap();
        assert_eq!(samples.len(), 20);
        let slope: f64 = fits[0][1].parse().unwrap();
        assert!((slope + 0.25).abs() < 1e-12);
    }
}
