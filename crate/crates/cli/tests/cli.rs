use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccentropy")).args(args).output().expect("run binary")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn temp_csv(name: &str, body: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("ccentropy-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn product_cce_closed_form() {
    let out = run(&["measure", "--family", "product", "--dim", "2", "--stat", "cce"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outputs"]["estimate"]["value"], 0.25);
    assert_eq!(v["outputs"]["estimate"]["method"], "closed_form");
    assert_eq!(v["inputs"]["qmc_seed"], 0x5EED_CC1E);
}

#[test]
fn cubature_agrees_with_closed_form() {
    let out = run(&[
        "measure", "--family", "min", "--dim", "3", "--stat", "ccigf:2", "--method", "cubature", "--tol", "1e-6",
    ]);
    let v = json(&out);
    let closed = json(&run(&["measure", "--family", "min", "--dim", "3", "--stat", "ccigf:2"]));
    let a = v["outputs"]["estimate"]["value"].as_f64().unwrap();
    let b = closed["outputs"]["estimate"]["value"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn negative_parameters_parse() {
    let out = run(&["measure", "--family", "frank", "--params", "-3", "--stat", "rho"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["outputs"]["estimate"]["value"].as_f64().unwrap() < 0.0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["measure", "--family", "nope", "--stat", "cce"]).status.code(), Some(2));
    assert_eq!(run(&["measure", "--family", "clayton", "--stat", "cce"]).status.code(), Some(2));
    assert_eq!(run(&["measure", "--family", "product", "--stat", "fcce:2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let out = run(&["measure", "--family", "clayton", "--params", "0", "--stat", "cce"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn missing_column_lists_available() {
    let p = temp_csv("cols.csv", "a,b\n0.1,0.2\n0.3,0.1\n0.5,0.9\n");
    let out = run(&["empirical", "--data", p.to_str().unwrap(), "--cols", "a,zz"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zz") && err.contains("a, b"), "{err}");
}

#[test]
fn corrected_formula_warning() {
    let v = json(&run(&["cckl", "--family-a", "lower_bound_w", "--family-b", "product"]));
    assert!((v["outputs"]["estimate"]["value"].as_f64().unwrap() - 1.0 / 18.0).abs() < 1e-15);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn gof_rejects_wrong_family_with_exit_1() {
    let dir = std::env::temp_dir().join(format!("ccentropy-cli-{}-gof.csv", std::process::id()));
    let d = dir.to_str().unwrap();
    let synth = run(&["synth", "--family", "clayton", "--params", "4", "--n", "200", "--seed", "2", "--out", d]);
    assert_eq!(synth.status.code(), Some(0));
    let out = run(&["gof", "--data", d, "--family", "product", "--reps", "200"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["outputs"]["gof"]["reject"], true);
    assert!(v["outputs"]["gof"].get("replicates").is_none());
    let ok = run(&["gof", "--data", d, "--family", "clayton", "--reps", "200", "--keep-replicates"]);
    let v = json(&ok);
    assert_eq!(v["outputs"]["gof"]["replicates"].as_array().unwrap().len(), 200);
}

#[test]
fn replay_is_byte_identical_across_threads() {
    let args = [
        "power",
        "--null-family",
        "clayton",
        "--null-params",
        "0.5",
        "--true-family",
        "product",
        "--n",
        "60",
        "--reps",
        "200",
    ];
    let go = |t: &str| {
        Command::new(env!("CARGO_BIN_EXE_ccentropy")).args(args).env("CCENTROPY_THREADS", t).output().unwrap().stdout
    };
    let base = go("1");
    assert!(!base.is_empty());
    assert_eq!(base, go("3"));
    assert_eq!(base, go("1"));
}

#[test]
fn bad_thread_count_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_ccentropy"))
        .args(["measure", "--family", "product", "--stat", "cce"])
        .env("CCENTROPY_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_curve_ends_at_full_size() {
    let mut body = String::from("x,y\n");
    for i in 0..130 {
        let a = (i as f64 * 0.618).fract();
        let b = (i as f64 * 0.382 + 0.1).fract();
        body.push_str(&format!("{a},{b}\n"));
    }
    body.push_str("NA,0.5\n");
    let p = temp_csv("curve.csv", &body);
    let v = json(&run(&["empirical", "--data", p.to_str().unwrap(), "--stat", "bk", "--dump-curve"]));
    let sizes: Vec<u64> = v["outputs"]["curve"].as_array().unwrap().iter().map(|e| e["n"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![50, 100, 130]);
    assert_eq!(v["inputs"]["rows_dropped"], 1);
    let est = &v["outputs"]["estimate"];
    assert!((est["value"].as_f64().unwrap() - est["closed_form"].as_f64().unwrap()).abs() < 1e-5);
}
