use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

const FILES: [&str; 5] = [
    "comparison.csv",
    "ensemble.csv",
    "limit_cov.csv",
    "manifest.json",
    "reports.json",
];

fn shotlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shotlab")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    shotlab(&all)
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn smoke_config() -> Value {
    let out = shotlab(&["--preset", "determinism-smoke", "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, value: &Value) -> String {
    let path = dir.join("config.json");
    fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn renewal_preset_passes_and_emits_five_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "renewal-scaledvar"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(listing(dir.path()), FILES);
    let reports: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports["pass"], json!(true));
}

#[test]
fn invalid_index_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config();
    cfg["scenario"]["response"] = json!({"kind": "scaled_variable", "beta": -1.5});
    let path = write_config(dir.path(), &cfg);
    let out = shotlab(&["--config", &path, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta > -(rho ∧ 1)"), "{err}");
    assert!(!dir.path().join("run").exists());
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config();
    cfg["scenario"]["extra"] = json!(true);
    let path = write_config(dir.path(), &cfg);
    assert_eq!(shotlab(&["--config", &path]).status.code(), Some(2));

    assert_eq!(shotlab(&["--preset", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(
        shotlab(&["--config", "/nonexistent/config.json"]).status.code(),
        Some(2)
    );
    assert_eq!(shotlab(&[]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config();
    cfg["checks"] = json!([{"check": "covariance", "se_multiplier": "1e-9"}]);
    let path = write_config(dir.path(), &cfg);
    let out = shotlab(&["--config", &path, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    // reports are still written, and they record the failure
    let reports: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/reports.json")).unwrap()).unwrap();
    assert_eq!(reports["pass"], json!(false));
    assert_eq!(reports["checks"][0]["pass"], json!(false));
}

#[test]
fn numeric_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config();
    cfg["scenario"]["response"] = json!({"kind": "survival_indicator", "beta": -0.5});
    cfg["tolerances"] = json!({"quadrature": "1e-300"});
    let path = write_config(dir.path(), &cfg);
    let out = shotlab(&["--config", &path, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let args = ["--preset", "determinism-smoke", "--seed", "5", "--replicates", "300"];
    for (d, threads) in [(&a, "1"), (&b, "1"), (&c, "8")] {
        let mut all = args.to_vec();
        all.extend(["--threads", threads]);
        assert!(run_in(d, &all).status.code().unwrap() <= 1);
    }
    for f in FILES {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
    let other = dir.path().join("d");
    run_in(
        &other,
        &["--preset", "determinism-smoke", "--seed", "6", "--replicates", "300"],
    );
    assert_ne!(
        fs::read(a.join("ensemble.csv")).unwrap(),
        fs::read(other.join("ensemble.csv")).unwrap()
    );
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_in(
        &first,
        &["--preset", "determinism-smoke", "--seed", "11", "--replicates", "200"],
    );
    let manifest: Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], json!(11));
    let path = write_config(dir.path(), &manifest["config"]);
    let second = dir.path().join("second");
    run_in(&second, &["--config", &path]);
    for f in FILES {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["--preset", "determinism-smoke", "--replicates", "20"]);
    let read = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
    assert!(read("ensemble.csv").starts_with("replicate,u,value\n0,0.5,"));
    assert!(read("limit_cov.csv").starts_with("u,0.5,1.0\n0.5,"));
    assert!(read("comparison.csv").starts_with("i,j,empirical,limit,se,z_score\n0,0,"));
}

#[test]
fn lists_presets() {
    let out = shotlab(&["--list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "renewal-scaledvar",
        "limit-closed-forms",
        "perturbed-survival",
        "renewal-ou-fictitious",
        "poisson-centered",
        "hypothesis-checks",
        "perturbed-lln",
    ] {
        assert!(text.contains(name), "{name}");
    }
}
