use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use markovfit::{c64, Mat, SnapshotSeries, TransferMatrix};
use markovfit_cli::commands::BoundRow;
use markovfit_cli::format::{to_json_pretty, SnapshotFile};
use markovfit_cli::report::{CheckReport, FitReport, IntervalCheck, Metadata};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_markovfit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut args = vec!["simulate", "--out", path_str(&out)];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn write_series(dir: &TempDir, name: &str, mats: Vec<TransferMatrix>) -> PathBuf {
    let series = SnapshotSeries::new(mats[0].dim(), mats).unwrap();
    let path = dir.path().join(name);
    std::fs::write(&path, to_json_pretty(&SnapshotFile::from_series(&series))).unwrap();
    path
}

fn dephasing(coherence: f64) -> TransferMatrix {
    let m = Mat::from_fn(4, 4, |i, j| match (i == j, i == 0 || i == 3) {
        (false, _) => c64::new(0.0, 0.0),
        (true, true) => c64::new(1.0, 0.0),
        (true, false) => c64::new(coherence, 0.0),
    });
    TransferMatrix::new(2, m).unwrap()
}

fn read_report(path: &Path) -> FitReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulated_constant_trajectory_fits_as_markovian() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "const.json", &["--n", "4", "--seed", "3"]);
    let report = dir.path().join("report.json");
    let o = run(&["fit", path_str(&input), "--out", path_str(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&report);
    assert_eq!(r.verdict, markovfit::Verdict::MarkovConsistent);
    assert_eq!(r.intervals.len(), 4);
    assert!(r.total_distance < 1e-6);
}

#[test]
fn simulation_is_deterministic_in_seed() {
    let dir = TempDir::new().unwrap();
    let args = ["--trajectory", "linear", "--n", "3", "--seed", "11", "--noise-sigma", "1e-5"];
    let a = std::fs::read(simulate(&dir, "a.json", &args)).unwrap();
    let b = std::fs::read(simulate(&dir, "b.json", &args)).unwrap();
    assert_eq!(a, b);
    let c = std::fs::read(simulate(&dir, "c.json", &["--trajectory", "linear", "--n", "3", "--seed", "12"])).unwrap();
    assert_ne!(a, c);
}

#[test]
fn single_snapshot_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "one.json", &["--n", "1", "--d", "3"]);
    let file: SnapshotFile = serde_json::from_str(&std::fs::read_to_string(&input).unwrap()).unwrap();
    assert_eq!(file.snapshots.len(), 1);
    assert_eq!(file.snapshots[0].matrix.len(), 9);
    let o = run(&["fit", path_str(&input), "--out", path_str(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn piecewise_simulation_is_fittable() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "pw.json", &["--trajectory", "piecewise", "--n", "4"]);
    let o = run(&["fit", path_str(&input), "--out", path_str(&dir.path().join("r.json"))]);
    // switching between Lindbladians at an interval boundary stays Markovian
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn recoherence_exits_non_markovian() {
    let dir = TempDir::new().unwrap();
    let input = write_series(&dir, "recoherence.json", vec![dephasing(0.05), TransferMatrix::identity(2)]);
    let report = dir.path().join("r.json");
    let o = run(&["fit", "--threshold", "1e-3", path_str(&input), "--out", path_str(&report)]);
    assert_eq!(o.status.code(), Some(2));
    let r = read_report(&report);
    assert!(r.branch_scores.iter().all(|b| b.total_distance > 0.1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-markovian"));
}

#[test]
fn singular_series_exits_cannot_assess() {
    let dir = TempDir::new().unwrap();
    let input = write_series(&dir, "singular.json", vec![dephasing(0.0), dephasing(0.0)]);
    let o = run(&["fit", path_str(&input), "--out", path_str(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_inputs_exit_one_with_location() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            "side.json",
            r#"{"format_version": "1", "d": 2, "snapshots": [{"matrix": [[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[1,0]]]}]}"#,
            "snapshots[0].matrix",
        ),
        ("missing.json", "{\n  \"format_version\": \"1\",\n  \"snapshots\": []\n}", "missing field `d`"),
        ("syntax.json", "{\n  \"format_version\": \"1\",\n  \"d\": 2,\n  \"snapshots\": [\n    {\"matrix\": [[[1, 0]]] oops\n", "line 5"),
        ("entry.json", r#"{"format_version": "1", "d": 1, "snapshots": [{"matrix": [[[1, "x"]]]}]}"#, "snapshots[0].matrix[0][0][1]"),
        (
            "times.json",
            r#"{"format_version": "1", "d": 1, "snapshots": [{"t": 1.0, "matrix": [[[1, 0]]]}, {"t": 0.5, "matrix": [[[1, 0]]]}]}"#,
            "snapshots[1].t",
        ),
        ("version.json", r#"{"format_version": "9", "d": 1, "snapshots": [{"matrix": [[[1, 0]]]}]}"#, "format_version"),
    ];
    for (name, text, needle) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        for cmd in ["fit", "check"] {
            let o = run(&[cmd, path_str(&path)]);
            let err = String::from_utf8_lossy(&o.stderr);
            assert_eq!(o.status.code(), Some(1), "{name}: {err}");
            assert!(err.contains(needle), "{name}: {err:?} lacks {needle:?}");
        }
    }
    let o = run(&["fit", path_str(&dir.path().join("absent.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["fit"],
        vec!["bounds", "--eta", "-1", "--n", "4"],
        vec!["bounds", "--eta", "1"],
        vec!["simulate", "--d", "1"],
        vec!["simulate", "--noise-sigma", "-1"],
        vec!["frobnicate"],
        vec!["fit", "x.json", "--beta", "0.1", "--beta-sweep", "0.1:1:3"],
    ] {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_are_deterministic_apart_from_metadata() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "lin.json", &["--trajectory", "linear", "--n", "3", "--seed", "5"]);
    let mut reports = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("r{k}.json"));
        let o = bin()
            .env("MARKOVFIT_THREADS", threads)
            .args(["fit", path_str(&input), "--eta", "0.5", "--out", path_str(&out)])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = read_report(&out);
        assert!(r.metadata.generated_unix_seconds.is_some());
        r.metadata = Metadata::default();
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
    let b = reports[0].bounds.as_ref().expect("eta given");
    assert!(b.max_theta_error <= b.theta_error_bound * 10.0);
}

#[test]
fn beta_sweep_is_reported() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "lin.json", &["--trajectory", "linear", "--n", "3"]);
    let out = dir.path().join("r.json");
    let o = run(&["fit", path_str(&input), "--beta-sweep", "0.001:1:3", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&out);
    assert_eq!(r.beta_sweep.len(), 3);
    assert!(r.beta_sweep.iter().any(|s| s.beta == r.beta_used));
    let best = r.beta_sweep.iter().map(|s| s.total_distance).fold(f64::INFINITY, f64::min);
    assert!(r.total_distance <= best * (1.0 + 1e-9) + 1e-12);
}

fn check(path: &Path) -> CheckReport {
    let o = run(&["check", path_str(path)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn check_reports_residuals() {
    let dir = TempDir::new().unwrap();
    let identity = check(&write_series(&dir, "id.json", vec![TransferMatrix::identity(2), TransferMatrix::identity(2)]));
    for s in &identity.snapshots {
        assert!(s.trace_residual == 0.0 && s.choi_min_eigenvalue.abs() < 1e-15);
    }

    let recoherence = check(&write_series(&dir, "rc.json", vec![dephasing(0.05), TransferMatrix::identity(2)]));
    assert!(recoherence.worst_interval_choi_eigenvalue.unwrap() < -0.01);
    assert!(recoherence.worst_snapshot_choi_eigenvalue >= -1e-15);

    let sigma = 1e-4;
    let noisy = simulate(&dir, "noisy.json", &["--n", "3", "--noise-sigma", "1e-4", "--seed", "4"]);
    let report = check(&noisy);
    for s in &report.snapshots {
        assert!(s.trace_residual < 50.0 * sigma * 4.0, "{}", s.trace_residual);
        assert!(s.choi_min_eigenvalue > -50.0 * sigma * 4.0);
    }
    assert!(report.intervals.iter().all(|c| matches!(c, IntervalCheck::Computed { .. })));
}

#[test]
fn bounds_table_values() {
    let o = run(&["bounds", "--eta", "1", "-t", "1", "--n", "10", "--d", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &rows[0];
    assert!((row["theta_error_bound"].as_f64().unwrap() - 1e-3).abs() < 1e-15);
    assert!((row["snapshot_error_bound"].as_f64().unwrap() - 0.02014).abs() < 1e-5);
    assert!((row["beta_default"].as_f64().unwrap() - 0.01).abs() < 1e-15);

    let o = run(&["bounds", "--eta", "0", "--n", "4,8"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("0.000000e0") && text.contains("1.000000e-12"), "{text}");

    let o = run(&["bounds", "--eta", "0.7", "--n", "4,8,16", "--json"]);
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    let theta: Vec<f64> = rows.iter().map(|r| r["theta_error_bound"].as_f64().unwrap()).collect();
    assert!(theta.windows(2).all(|w| w[1] < w[0]));
    let _typed: Vec<BoundRowShape> = serde_json::from_value(Value::Array(rows)).unwrap();
}

/// Mirror of the printed bound row, to pin the field names.
#[derive(serde::Deserialize)]
#[allow(dead_code)]
struct BoundRowShape {
    intervals: usize,
    theta_error_bound: f64,
    snapshot_error_bound: f64,
    beta_default: f64,
}

#[test]
fn bound_rows_match_library() {
    let args = markovfit_cli::args::BoundsArgs { eta: 1.0, total_time: 1.0, n: vec![10], d: 2, magnus: 0.0, json: true };
    let rows = markovfit_cli::commands::bound_rows(&args).unwrap();
    assert_eq!(rows, vec![BoundRow { intervals: 10, theta_error_bound: 1e-3, snapshot_error_bound: rows[0].snapshot_error_bound, beta_default: 0.01 }]);
}
