use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn nc2ent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nc2ent"))
        .args(args)
        .env_remove("NC2ENT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

// theta = pi/2 pair |+>, |->
fn gcnot_states(dir: &Path) -> String {
    let body = format!(r#"{{"dimension": 2, "states": [[{H}, {H}], [{H}, {m}]]}}"#, m = -H);
    write(dir, "gc.json", &body)
}

#[test]
fn convert_basis_input_has_c_rank_two() {
    let dir = tempfile::tempdir().unwrap();
    let states = gcnot_states(dir.path());
    let v = stdout_json(&nc2ent(&["convert", "--states", &states, "--input", "[1,0]"]));
    assert_eq!(v["c_rank"], 2);
    assert_eq!(v["schmidt_rank"], 2);
    assert!(v["entropy_ebits"].as_f64().unwrap() > 0.0);
}

#[test]
fn convert_classical_input_stays_product() {
    let dir = tempfile::tempdir().unwrap();
    let states = gcnot_states(dir.path());
    let input = format!("[{H},{H}]");
    let v = stdout_json(&nc2ent(&["convert", "--states", &states, "--input", &input]));
    assert_eq!(v["c_rank"], 1);
    assert_eq!(v["schmidt_rank"], 1);
    assert!(v["entropy_ebits"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn convert_rejects_dependent_set() {
    let dir = tempfile::tempdir().unwrap();
    let states = write(dir.path(), "dep.json", r#"{"dimension": 2, "states": [[1, 0], [1, 0]]}"#);
    let out = nc2ent(&["convert", "--states", &states, "--input", "[1,0]"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn convert_requires_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let states = gcnot_states(dir.path());
    let out = nc2ent(&["convert", "--states", &states]);
    assert_eq!(out.status.code(), Some(2));
}

fn sweep_rows(args: &[&str]) -> Vec<Vec<f64>> {
    let out = nc2ent(args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("theta"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

fn row_maxima(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let mut best: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        match best.iter_mut().find(|(t, _)| (*t - r[0]).abs() < 1e-15) {
            Some(b) => b.1 = b.1.max(r[3]),
            None => best.push((r[0], r[3])),
        }
    }
    best
}

#[test]
fn sweep_rows_reach_one_ebit() {
    let rows = sweep_rows(&["sweep", "--theta-range", "pi/2:pi-0.1:8", "--mu-range", "0.01:1:50"]);
    let maxima = row_maxima(&rows);
    assert_eq!(maxima.len(), 8);
    for (theta, e) in maxima {
        assert!((e - 1.0).abs() <= 1e-6, "theta {theta}: {e}");
    }
}

#[test]
fn sweep_input_one_mirrors_input_zero() {
    let zero = sweep_rows(&["sweep", "--theta-range", "2:2:1", "--mu-range", "0.5:1:6", "--grid-only"]);
    let pi = std::f64::consts::PI;
    let mirrored = format!("{t}:{t}:1", t = pi - 2.0);
    let one = sweep_rows(&[
        "sweep", "--theta-range", &mirrored, "--mu-range", "0.5:1:6", "--grid-only", "--input", "1",
    ]);
    assert_eq!(zero.len(), one.len());
    for (a, b) in zero.iter().zip(&one) {
        assert!((a[1] - b[1]).abs() < 1e-12);
        assert!((a[3] - b[3]).abs() < 1e-9, "{a:?} vs {b:?}");
    }
}

#[test]
fn sweep_rejects_empty_range() {
    let out = nc2ent(&["sweep", "--theta-range", "2:1:5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn modesplit_rate_matches_balanced_probability() {
    let runs = 10_000.0;
    let v = stdout_json(&nc2ent(&[
        "modesplit", "--N", "2", "--target", "1:1", "--runs", "10000", "--seed", "11",
    ]));
    let p = v["coherent_probability"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 1e-12);
    let rate = v["success_rate"].as_f64().unwrap();
    let sigma = (p * (1.0 - p) / runs).sqrt();
    assert!((rate - p).abs() <= 3.0 * sigma, "{rate} vs {p}");
}

#[test]
fn modesplit_zero_runs_reports_nulls() {
    let v = stdout_json(&nc2ent(&["modesplit", "--N", "2", "--target", "1:1", "--runs", "0"]));
    assert!(v["success_rate"].is_null());
    assert!(v["mean_rounds"].is_null());
}

#[test]
fn modesplit_superposition_file_splits_faithfully() {
    let dir = tempfile::tempdir().unwrap();
    // K = 2, N = 2: Dicke amplitudes over (2,0), (1,1), (0,2)
    let input = write(dir.path(), "in.json", "[0.6, 0, 0.8]");
    let trace = dir.path().join("trace.jsonl");
    let v = stdout_json(&nc2ent(&[
        "modesplit", "--N", "2", "--target", "1:1", "--input-file", &input, "--max-rounds", "30",
        "--runs", "50", "--seed", "3", "--out", trace.to_str().unwrap(),
    ]));
    assert!(v["successes"].as_u64().unwrap() > 0);
    assert!(v["fidelity"]["min"].as_f64().unwrap() >= 1.0 - 1e-9);
    let text = std::fs::read_to_string(&trace).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["run"], 0);
    assert_eq!(first["round"], 1);
}

#[test]
fn modesplit_rejects_total_reflection() {
    let out = nc2ent(&["modesplit", "--N", "2", "--target", "1:1", "--r", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn modesplit_rejects_wrong_split() {
    let out = nc2ent(&["modesplit", "--N", "3", "--target", "1:1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn witness_detects_basis_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let states = gcnot_states(dir.path());
    let out_file = dir.path().join("w.json");
    let plus = format!("[{H},{H}]");
    let v = stdout_json(&nc2ent(&[
        "witness", "--states", &states, "--target-state", "[1,0]", "--test-state", &plus,
        "--out", out_file.to_str().unwrap(),
    ]));
    assert!(v["target"]["value"].as_f64().unwrap() < 0.0);
    assert_eq!(v["target"]["verdict"], "non-classical detected");
    assert!(v["classical_min"].as_f64().unwrap() >= -1e-10);
    assert_eq!(v["tests"][0]["verdict"], "not detected");
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(w["rows"], 2);
}

#[test]
fn verify_smoke_run_passes() {
    let v = stdout_json(&nc2ent(&["verify", "--trials", "1"]));
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_rejects_unknown_suite() {
    let out = nc2ent(&["verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_is_deterministic_under_env_seed() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_nc2ent"))
            .args(["verify", "--suite", "modesplit", "--trials", "2"])
            .env("NC2ENT_SEED", "42")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 42);
}
