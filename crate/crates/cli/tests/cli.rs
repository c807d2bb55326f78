use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sobol-stream"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sobol-stream")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn indices(doc: &Value) -> Vec<f64> {
    doc["per_input"].as_array().unwrap().iter().map(|p| p["s"].as_f64().unwrap()).collect()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Success, possibly without a noise threshold (few-input models often
/// have no negative index).
fn produced(out: &Output) -> bool {
    matches!(out.status.code(), Some(0) | Some(4))
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

/// Drops the fields allowed to differ between identical runs.
fn without_timestamp(mut doc: Value) -> Value {
    doc["meta"].as_object_mut().unwrap().remove("timestamp");
    doc
}

#[test]
fn hand_example_csv() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "hand.csv");
    std::fs::write(&input, "x0,y\n1,1\n2,2\n3,3\n4,4\n").unwrap();
    let out = path(&dir, "hand.json");
    let status = run(&["analyze", "--input", p(&input), "--scheme", "quantile", "--bins", "2", "--out", p(&out)]);
    // No negative index, so the heuristic is unavailable, but the result is written.
    assert_eq!(status.status.code(), Some(4));
    let doc = json(&out);
    assert!((indices(&doc)[0] - 0.55).abs() < 1e-12);
    assert!(doc["threshold"].is_null());
    assert!(doc["threshold_unavailable"].is_string());
    assert_eq!(doc["meta"]["m_effective"][0], 2);
}

#[test]
fn polynomial_uniform_first_index() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.json");
    let status = run(&[
        "analyze", "--model", "polynomial-uniform", "--model-params", "1,1,10", "-n", "100000",
        "--scheme", "equidistant", "--bins", "50", "--seed", "3", "--out", p(&out),
    ]);
    assert!(produced(&status), "{}", String::from_utf8_lossy(&status.stderr));
    let doc = json(&out);
    let s = indices(&doc);
    assert!((s[0] - 0.44776).abs() < 0.01, "{s:?}");
    assert!((s[1] - 0.44859).abs() < 0.01, "{s:?}");
    for key in ["scheme", "bins", "m_effective", "init_samples", "n", "batch_size", "seed", "sigma_convention"] {
        assert!(!doc["meta"][key].is_null(), "meta.{key} missing");
    }
}

#[test]
fn snapshots_and_fresh_run_agree() {
    let dir = TempDir::new().unwrap();
    let snap = path(&dir, "snap.json");
    let fresh = path(&dir, "fresh.json");
    let common = ["analyze", "--model", "ishigami", "-n", "40000", "--scheme", "kde", "--seed", "9"];
    let a = run(&[&common[..], &["--snapshot-every", "20000", "--out", p(&snap)]].concat());
    let b = run(&[&common[..], &["--out", p(&fresh)]].concat());
    assert!(produced(&a) && produced(&b));
    let snap = json(&snap);
    let fresh = json(&fresh);
    let records = snap["snapshots"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["n"], 20000);
    assert_eq!(records[1]["n"], 40000);
    // Snapshot boundaries change the batch split, not the data.
    assert_close(&indices(&snap), &indices(&fresh), 1e-12);
    let last: Vec<f64> = records[1]["s"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(last, indices(&snap));
}

#[test]
fn identical_runs_are_identical() {
    let dir = TempDir::new().unwrap();
    let docs: Vec<Value> = (0..2)
        .map(|k| {
            let out = path(&dir, &format!("r{k}.json"));
            let st = run(&["analyze", "--model", "sobol-g", "--model-params", "20", "-n", "30000", "--seed", "4", "--out", p(&out)]);
            assert!(produced(&st));
            json(&out)
        })
        .collect();
    assert_eq!(docs[0]["meta"]["determinism_hash"], docs[1]["meta"]["determinism_hash"]);
    assert_eq!(without_timestamp(docs[0].clone()), without_timestamp(docs[1].clone()));
}

#[test]
fn files_reproduce_model_runs() {
    let dir = TempDir::new().unwrap();
    let model = ["--model", "polynomial-spike-slab", "--seed", "2"];
    let direct = path(&dir, "direct.json");
    let st = run(&[&["analyze"][..], &model, &["-n", "20000", "--out", p(&direct)]].concat());
    assert!(produced(&st));
    let expected = indices(&json(&direct));
    for format in ["csv", "f64le"] {
        let data = path(&dir, &format!("data.{format}"));
        let st = run(&[&["generate"][..], &model, &["-n", "20000", "--format", format, "--out", p(&data)]].concat());
        assert!(st.status.success());
        let out = path(&dir, &format!("{format}.json"));
        let st = run(&["analyze", "--input", p(&data), "--format", format, "--out", p(&out)]);
        assert!(produced(&st), "{}", String::from_utf8_lossy(&st.stderr));
        assert_eq!(indices(&json(&out)), expected, "{format}");
    }
    // Spike values force collapsed quantile edges, reported in metadata.
    let doc = json(&direct);
    assert!(doc["meta"]["m_effective"][0].as_u64().unwrap() < 50);
    assert!(!doc["meta"]["partition_warnings"].as_array().unwrap().is_empty());
}

#[test]
fn stdin_input() {
    let mut child = bin()
        .args(["analyze", "--input", "-", "--bins", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"x0,y\n1,1\n2,2\n3,3\n4,4\n").unwrap();
    let out = child.wait_with_output().unwrap();
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((indices(&doc)[0] - 0.55).abs() < 1e-12);
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    std::fs::write(&bad, "x0,y\n1,2\n3,oops\n").unwrap();
    let st = run(&["analyze", "--input", p(&bad), "--bins", "2"]);
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("row 2"));

    let st = run(&["analyze", "--input", p(&path(&dir, "missing.csv"))]);
    assert_eq!(st.status.code(), Some(1));

    let flat = path(&dir, "flat.csv");
    std::fs::write(&flat, "x0,y\n1,5\n2,5\n3,5\n4,5\n").unwrap();
    let st = run(&["analyze", "--input", p(&flat), "--bins", "2"]);
    assert_eq!(st.status.code(), Some(3));

    let st = run(&["analyze", "--model", "ishigami", "-n", "100", "--bins", "1"]);
    assert_eq!(st.status.code(), Some(2));
    let st = run(&["analyze", "--model", "ishigami", "-n", "100", "--bins", "10", "--init-samples", "5"]);
    assert_eq!(st.status.code(), Some(2));
    let st = run(&["analyze", "--model", "no-such-model", "-n", "100"]);
    assert_eq!(st.status.code(), Some(2));

    // Many inputs guarantee negative noise indices, so a clean exit.
    let st = run(&["analyze", "--model", "sobol-g", "--model-params", "200", "-n", "5000", "--bins", "10"]);
    assert_eq!(st.status.code(), Some(0));
}

#[test]
fn filter_applies_heuristic() {
    let dir = TempDir::new().unwrap();
    let result = path(&dir, "r.json");
    let doc = serde_json::json!({
        "per_input": [{"s": -0.02}, {"s": -0.01}, {"s": 0.01}, {"s": 0.5}]
    });
    std::fs::write(&result, doc.to_string()).unwrap();
    let out = path(&dir, "f.json");
    let st = run(&["filter", p(&result), "-k", "4", "--out", p(&out)]);
    assert!(st.status.success());
    let f = json(&out);
    assert!((f["threshold"]["sigma"].as_f64().unwrap() - 0.018257).abs() < 1e-6);
    assert!((f["threshold"]["value"].as_f64().unwrap() - 0.073030).abs() < 1e-6);
    assert_eq!(f["significant"], serde_json::json!([{"index": 3, "s": 0.5}]));
    assert_eq!(f["explained_variance"], 0.5);

    std::fs::write(&result, r#"{"per_input": [{"s": 0.1}, {"s": 0.2}]}"#).unwrap();
    let st = run(&["filter", p(&result), "--out", p(&out)]);
    assert_eq!(st.status.code(), Some(4));
}

#[test]
fn save_and_resume() {
    let dir = TempDir::new().unwrap();
    let state = path(&dir, "state.json");
    let first = path(&dir, "first.json");
    let resumed = path(&dir, "resumed.json");
    let whole = path(&dir, "whole.json");
    let model = ["--model", "polynomial-normal", "--seed", "5", "--scheme", "equidistant"];
    assert!(produced(&run(&[&["analyze"][..], &model, &["-n", "12000", "--save-state", p(&state), "--out", p(&first)]].concat())));
    assert!(produced(&run(&[&["analyze"][..], &model, &["-n", "30000", "--resume", p(&state), "--out", p(&resumed)]].concat())));
    assert!(produced(&run(&[&["analyze"][..], &model, &["-n", "30000", "--out", p(&whole)]].concat())));
    assert_close(&indices(&json(&resumed)), &indices(&json(&whole)), 1e-10);
    assert_eq!(json(&resumed)["meta"]["n"], 30000);
}

#[test]
fn study_writes_distributions_and_plot_data() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "study.json");
    let plots = path(&dir, "plots");
    let st = run(&[
        "study", "--model", "polynomial-normal", "--scheme", "quantile,equidistant", "--sweep-n", "1000,4000",
        "--replicates", "6", "--bins", "10", "--out", p(&out), "--plot-dir", p(&plots),
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let doc = json(&out);
    assert_eq!(doc["runs"].as_array().unwrap().len(), 4);
    assert_eq!(doc["reference"]["kind"], "analytic");
    let run0 = &doc["runs"][0];
    assert_eq!(run0["per_input"][2]["values"].as_array().unwrap().len(), 6);
    assert!(run0["per_input"][0]["p5"].as_f64().unwrap() <= run0["per_input"][0]["p95"].as_f64().unwrap());
    assert_eq!(doc["sigma_slopes"].as_array().unwrap().len(), 2);
    assert!(doc.get("timing").is_none());
    let rows = std::fs::read_to_string(plots.join("replicates.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 6 * 3);
    assert!(plots.join("convergence.csv").exists());
}

#[test]
fn study_rejects_single_replicate() {
    let st = run(&["study", "--model", "ishigami", "--replicates", "1", "-n", "1000"]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn diagnose_reports_exact_numerators() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "d.json");
    let plots = path(&dir, "plots");
    let st = run(&["diagnose", "--replicates", "4", "--bins", "20", "--out", p(&out), "--plot-dir", p(&plots)]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let doc = json(&out);
    assert!((doc["whole_domain_numerator"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((doc["exact_numerator"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(doc["schemes"].as_array().unwrap().len(), 2);
    assert!(plots.join("diagnose_bins.csv").exists());

    let st = run(&["diagnose", "--replicates", "2", "--bins", "10", "--input-index", "2", "--out", p(&out)]);
    assert!(st.status.success());
    let doc = json(&out);
    for b in doc["schemes"][0]["bins"].as_array().unwrap() {
        assert!((b["exact_mean_conditional_variance"].as_f64().unwrap() - 4.0).abs() < 1e-6);
    }

    let st = run(&["diagnose", "--model", "ishigami", "--replicates", "2"]);
    assert_eq!(st.status.code(), Some(3));
}
