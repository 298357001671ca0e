use std::path::Path;
use std::process::{Command, Output};

use multifidelity::dataset::load_csv;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multifidelity"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = cli(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

const SMALL: &str = r#"{
  "target_grid": {"n_f": 10, "n_s": 10},
  "synthetic": {"alpha": 1.05, "p": 0.7, "offset": 0.085, "noise_std": 0.02, "stability_band": [0.0, 1e300], "seed": 0},
  "search": {"grid": [{"c": 10.0, "epsilon": 0.01, "gamma": 0.1}, {"c": 10.0, "epsilon": 0.01, "gamma": 1.0}], "k_folds": 5, "tol": 0.001},
  "benchmark": {
    "n_grid": [10, 20, 30], "reps": 3,
    "search": {"grid": [{"c": 10.0, "epsilon": 0.01, "gamma": 0.1}], "k_folds": 5, "tol": 0.001},
    "sweep": {"subgrid_sizes": [[2, 2], [3, 3]], "eval_reps": 2, "test_size": 20, "n_iterations": 4,
              "search": {"grid": [{"c": 10.0, "epsilon": 0.01, "gamma": 0.1}], "k_folds": 5, "tol": 0.001}}
  }
}"#;

#[test]
fn generate_default_target_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--seed", "1", "generate", "synthetic-target", "--h", "1.2", "--band-min", "0", "--out", "t.csv"], dir.path());
    let data = load_csv(dir.path().join("t.csv")).unwrap();
    assert_eq!(data.len(), 256);
    assert_eq!(data.heights(), vec![1.2]);
}

#[test]
fn generate_source_pool_for_three_heights() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "source", "--h", "0.7", "--h", "0.85", "--h", "1.2", "--n-s", "13", "--out", "s.csv"], dir.path());
    let data = load_csv(dir.path().join("s.csv")).unwrap();
    assert_eq!(data.len(), 624);
    assert_eq!(data.heights(), vec![0.7, 0.85, 1.2]);
}

#[test]
fn invalid_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["generate", "source", "--f-min", "800", "--f-max", "100", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
    assert_eq!(cli(&["no-such-command"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["fit-direct", "--data", "absent.csv", "--out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = cli(&["--config", "bad.json", "generate", "source", "--out", "s.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.json"), SMALL).unwrap();
    ok(&["--config", "small.json", "--seed", "2", "generate", "synthetic-target", "--h", "0.85", "--out", "t.csv"], d);
    ok(&["--config", "small.json", "generate", "source", "--h", "0.85", "--out", "s.csv"], d);
    ok(&["--config", "small.json", "--seed", "2", "fit-direct", "--data", "t.csv", "--out", "direct.json"], d);
    ok(&["--seed", "2", "fit-transfer", "--source", "s.csv", "--target", "t.csv", "--c", "10", "--gamma", "0.5", "--epsilon", "0.01", "--iterations", "5", "--out", "transfer.json"], d);
    for model in ["direct.json", "transfer.json"] {
        let out = ok(&["predict", "--model", model, "--input", "t.csv"], d);
        let text = String::from_utf8(out.stdout).unwrap();
        let mut rows = csv::Reader::from_reader(text.as_bytes());
        let preds: Vec<f64> = rows.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
        assert_eq!(preds.len(), 100, "{model}");
        let truth = load_csv(d.join("t.csv")).unwrap().targets();
        let err = (preds.iter().zip(&truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / 100.0).sqrt();
        assert!(err < 0.1, "{model}: training rmse {err}");
    }
    let out = ok(&["--config", "small.json", "grid-search", "--data", "t.csv"], d);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["scores"].as_array().unwrap().len(), 2);
}

#[test]
fn benchmark_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.json"), SMALL).unwrap();
    ok(&["--config", "small.json", "--seed", "4", "generate", "synthetic-target", "--h", "0.85", "--out", "t.csv"], d);
    ok(&["--config", "small.json", "generate", "source", "--h", "0.85", "--out", "s.csv"], d);
    let run = |out: &str, jobs: &str| {
        ok(&["--config", "small.json", "--seed", "9", "--jobs", jobs, "benchmark", "--source", "s.csv", "--target", "t.csv", "--out-dir", out], d);
    };
    run("a", "1");
    run("b", "3");
    for f in ["report.json", "curve.csv", "sweep.csv"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["h_mm"], 0.85);
}
