use std::path::Path;
use std::process::{Command, Output};

fn mbolab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbolab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MBOLAB_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn schedule_q5_reports_clamped_k() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbolab(&["validate-schedule", "-k", "2", "-s", "0.25", "-q", "5", "-n", "10000", "--csv"], dir.path());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,K,alpha,beta,h,eps,eps_lb_thm,eps_lb_cor,feasible,clamped"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "10000");
    assert_eq!(row[1], "10000");
    assert_eq!(row[2], "2.75");
    assert_eq!(row[3], "51.375");
    assert_eq!(row[9], "true");
    // the upper-rate ε is far below the lower bounds at this n: informational exit
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn schedule_human_table_and_feasible_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbolab(
        &[
            "validate-schedule", "-k", "2", "-s", "0.25", "-q", "2", "-n", "2000", "--c-eps", "2.0",
            "--eps-rule", "lower-rate",
        ],
        dir.path(),
    );
    let out = stdout(&o);
    assert!(out.contains("alpha = 0.500000"), "{out}");
    assert!(out.contains("feasible"), "{out}");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn inadmissible_schedule_exits_nonzero_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    // boundary 1/(2/k − s) = 4/3 for k = 2, s = ¼
    for q in ["1.2", "1.3333333333333333"] {
        let o = mbolab(&["validate-schedule", "-k", "2", "-s", "0.25", "-q", q, "-n", "10000"], dir.path());
        assert_eq!(o.status.code(), Some(4));
        let err = stderr(&o);
        assert!(err.contains("boundary"), "{err}");
        assert!(err.contains("\"exit_code\":4"), "{err}");
        assert!(stdout(&o).is_empty());
    }
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn circle_run_writes_trace_front_error_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"shrinking-circle\"\nn = 1000\neps = 0.1\nh = 0.015\nsteps = 6\nseeds = [1, 2]\noutput = \"out\"\ncache = \"cache\"\n",
    );
    let o = mbolab(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for seed in [1, 2] {
        let trace = read(out.join(format!("trace_seed{seed}.csv")));
        assert!(trace.starts_with("step,time,ones_count,energy,changed_nodes\n"));
        assert_eq!(trace.lines().count(), 1 + 7);
        let fe = read(out.join(format!("front_error_seed{seed}.csv")));
        assert!(fe.starts_with("step,time,disagreement,max_wrong_distance,reference_extinct\n"));
        assert!(out.join(format!("radius_seed{seed}.csv")).is_file());
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
    assert!(manifest["artifacts"].as_array().unwrap().len() >= 7);
    assert!(manifest["version"].is_string());
}

#[test]
fn rerun_is_byte_stable_and_hits_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"heat-error\"\nn = 800\neps = 0.12\nh = 0.02\nk = 25\noutput = \"out\"\ncache = \"cache\"\n",
    );
    let cfg = cfg.to_str().unwrap();
    let first = mbolab(&["run", "--config", cfg], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let snapshot: Vec<(String, Vec<u8>)> = ["summary.csv", "heat_error_seed1.csv"]
        .iter()
        .map(|f| (f.to_string(), std::fs::read(dir.path().join("out").join(f)).unwrap()))
        .collect();
    let m1: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/manifest.json"))).unwrap();
    assert_eq!(m1["runs"][0]["cache"]["hit"], false);

    let second = mbolab(&["run", "--config", cfg, "--jobs", "1"], dir.path());
    assert_eq!(second.status.code(), Some(0));
    for (f, bytes) in snapshot {
        assert_eq!(std::fs::read(dir.path().join("out").join(&f)).unwrap(), bytes, "{f}");
    }
    let m2: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/manifest.json"))).unwrap();
    assert_eq!(m2["runs"][0]["cache"]["hit"], true);
    assert_eq!(m1["config_hash"], m2["config_hash"]);
    assert_eq!(m1["artifacts"], m2["artifacts"]);
}

#[test]
fn cache_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_cache = dir.path().join("env-cache");
    let o = Command::new(env!("CARGO_BIN_EXE_mbolab"))
        .args(["run", "--scenario", "kernel-error", "-n", "300", "--eps", "0.2", "--h", "0.02", "-K", "10", "-o", "out"])
        .current_dir(dir.path())
        .env("MBOLAB_CACHE", &env_cache)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cached: Vec<_> = std::fs::read_dir(&env_cache).unwrap().collect();
    assert_eq!(cached.len(), 1);
    assert!(!dir.path().join(".mbolab-cache").exists());
}

#[test]
fn k_above_n_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbolab(
        &["run", "--scenario", "shrinking-circle", "-n", "100", "--eps", "0.3", "--h", "0.01", "-K", "101", "-o", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("\"kind\":\"config\""));
    assert!(!dir.path().join("out/manifest.json").exists());
    assert!(!dir.path().join("out/trace_seed1.csv").exists());
}

#[test]
fn cli_flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"stationary-band\"\nn = 100000\neps = 0.08\nh = 0.01\nsteps = 2\noutput = \"out\"\ncache = \"cache\"\n",
    );
    let o = mbolab(
        &["run", "--config", cfg.to_str().unwrap(), "-n", "600", "--set", "front.a=0.3", "--eps", "0.15"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/manifest.json"))).unwrap();
    assert_eq!(m["config"]["n"], 600);
    assert_eq!(m["config"]["eps"], 0.15);
    assert_eq!(m["config"]["front"]["a"], 0.3);
}

#[test]
fn numerical_failure_exits_3_with_record() {
    let dir = tempfile::tempdir().unwrap();
    // ε far below the typical spacing: isolated nodes
    let o = mbolab(
        &["run", "--scenario", "shrinking-circle", "-n", "50", "--eps", "0.001", "--h", "0.01", "-o", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/error.json"))).unwrap();
    assert_eq!(rec["error"]["kind"], "numerical");
}

#[test]
fn sample_graph_spectrum_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = mbolab(&["sample", "-n", "400", "--seed", "3", "--out", "pts.csv"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(read(d.join("pts.csv")).starts_with("x0,x1\n"));
    assert!(d.join("pts.csv.meta.json").is_file());

    let o = mbolab(&["build-graph", "--points", "pts.csv", "--eps", "0.15", "--edges", "e.csv", "--degrees", "d.csv"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(read(d.join("e.csv")).starts_with("i,j,w\n"));
    assert_eq!(read(d.join("d.csv")).lines().count(), 401);

    let args = ["spectrum", "--points", "pts.csv", "--eps", "0.15", "-K", "6", "--cache", "c", "--out", "ev.csv"];
    let o = mbolab(&args, d);
    assert!(stdout(&o).starts_with("computed"), "{}", stdout(&o));
    let o = mbolab(&args, d);
    assert!(stdout(&o).starts_with("cache hit"), "{}", stdout(&o));
    let ev = read(d.join("ev.csv"));
    assert_eq!(ev.lines().count(), 7);
    // a corrupted cache is recomputed, not trusted
    let file = std::fs::read_dir(d.join("c")).unwrap().next().unwrap().unwrap().path();
    let mut bytes = std::fs::read(&file).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&file, bytes).unwrap();
    let o = mbolab(&args, d);
    assert!(stdout(&o).starts_with("computed"), "{}", stdout(&o));
    let eigenvalues = |text: &str| -> Vec<String> {
        text.lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(eigenvalues(&read(d.join("ev.csv"))), eigenvalues(&ev));
}

#[test]
fn missing_points_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbolab(&["build-graph", "--points", "nope.csv", "--eps", "0.1", "--edges", "e", "--degrees", "d"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn study_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(
        d,
        "scenario = \"shrinking-circle\"\nseeds = [1, 2]\neps = 0.15\nh = 0.03\nk = 15\nsteps = 2\noutput = \"study\"\ncache = \"cache\"\n[sweep]\nn = [400, 800]\n",
    );
    let o = mbolab(&["study", "--config", cfg.to_str().unwrap()], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let wide = read(d.join("study/study.csv"));
    assert_eq!(wide.lines().count(), 5);
    assert!(read(d.join("study/study_long.csv")).starts_with("metric,n,eps,h,K,seed,value\n"));

    let o = mbolab(&["report", "--study", "study/study.csv", "--region-k", "2,3", "-o", "rep"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let evn = read(d.join("rep/error_vs_n.csv"));
    assert!(evn.contains("\nkernel_sup_error,400,"), "{evn}");
    assert!(evn.contains("\nkernel_sup_error,800,"), "{evn}");
    for f in ["plot_error_vs_n.py", "plot_radius_vs_time.py", "plot_parameter_region.py", "region_k2.csv", "region_k3.csv"] {
        assert!(d.join("rep").join(f).is_file(), "{f}");
    }
}

#[test]
fn report_of_empty_study_is_empty_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("empty.csv"),
        "n,seed,eps,h,K,degree_error,max_principle_error,mass_defect,kernel_sup_error,kernel_normalized,lambda2_scaled,heat_error_max,front_disagreement,extinction_time,error\n",
    )
    .unwrap();
    let o = mbolab(&["report", "--study", "empty.csv", "-o", "rep"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(d.join("rep/error_vs_n.csv")), "metric,n,median,count\n");
}

#[test]
fn report_names_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "n,seed,eps,h,K\n").unwrap();
    let o = mbolab(&["report", "--study", "bad.csv", "-o", "rep"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing column `degree_error`"), "{}", stderr(&o));
}

#[test]
fn radius_report_annotates_fitted_slope() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut text = String::from("step,time,r2_graph,r2_reference\n");
    for l in 0..10 {
        let t = 0.01 * l as f64;
        text += &format!("{l},{t},{},{}\n", 0.0625 - 0.2 * t, 0.0625 - 0.25 * t);
    }
    std::fs::write(d.join("radius_seed1.csv"), text).unwrap();
    let o = mbolab(&["report", "--radius", "radius_seed1.csv", "-o", "rep"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit = read(d.join("rep/radius_fit.csv"));
    let row: Vec<&str> = fit.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "radius_seed1");
    assert!((row[1].parse::<f64>().unwrap() + 0.2).abs() < 1e-12);
}
