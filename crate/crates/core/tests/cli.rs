//! Black-box tests of the `recur` binary: exit codes, output files, and
//! worker-count invariance at the process level.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn recur(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recur"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn recur")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_outcome_and_snapshots_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.json",
        r#"{
            "params": {"n": 500, "alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0},
            "record_times": [1.0, 2.0]
        }"#,
    );
    let run = |out: &str| {
        let o = recur(&["simulate", "--config", &cfg, "--seed", "9", "--out", out], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(tmp.path().join(out).join("outcome.json")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b, "same seed must give byte-identical outcomes");
    let snaps = fs::read_to_string(tmp.path().join("a/snapshots.csv")).unwrap();
    assert!(snaps.starts_with("time,z0,z1,n_clones_alive"));
    assert_eq!(snaps.lines().count(), 3);
}

#[test]
fn simulate_csv_format_prints_snapshot_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.json",
        r#"{
            "params": {"n": 500, "alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0},
            "record_times": [0.5]
        }"#,
    );
    let o = recur(&["simulate", "--config", &cfg, "--format", "csv"], tmp.path());
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("time,z0,z1,n_clones_alive"));
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn unwritable_output_path_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "exp.json",
        r#"{
            "experiment": "convergence",
            "params": {"alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0, "n": 300},
            "replicates": 1
        }"#,
    );
    let o = recur(
        &["experiment", "convergence", "--config", &cfg, "--out", "/proc/recur-denied"],
        tmp.path(),
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn simulate_rejects_invalid_params() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        r#"{"params": {"n": 500, "alpha": 0.5, "r0": 1.5, "d0": 1.0, "r1": 1.5, "d1": 1.0}}"#,
    );
    let o = recur(&["simulate", "--config", &cfg], tmp.path());
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("error"), "no machine-readable error: {stderr}");
}

#[test]
fn estimate_prints_estimates_json() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = write(
        tmp.path(),
        "obs.json",
        r#"{"n": 10000, "gamma": 9.2, "z0": 95,
            "clones": [1000, 500, 250, 125, 64, 32, 16, 8, 4, 2, 1]}"#,
    );
    let o = recur(&["estimate", "--config", &obs], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for field in ["lambda0_hat", "lambda1_hat", "r1_hat", "alpha_hat"] {
        assert!(est[field].is_number(), "missing {field}: {est}");
    }

    // Fractions form plus a detection threshold.
    let obs2 = write(
        tmp.path(),
        "obs2.json",
        r#"{"n": 10000, "gamma": 9.2, "z0": 95, "total_resistant": 2002,
            "clones": [0.4995005, 0.2497502, 0.1248751, 0.0624376, 0.031968,
                       0.015984, 0.007992, 0.003996, 0.001998, 0.000999, 0.0004995]}"#,
    );
    let o = recur(&["estimate", "--config", &obs2, "--threshold-frac", "0.02"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn estimate_requires_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = recur(&["estimate"], tmp.path());
    assert!(!o.status.success(), "missing --config must fail");
}

#[test]
fn unknown_subcommand_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = recur(&["frobnicate"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn experiment_writes_artifacts_worker_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "exp.json",
        r#"{
            "experiment": "convergence",
            "params": {"alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0, "n": 1000},
            "replicates": 3,
            "base_seed": 42
        }"#,
    );
    let rows = |out: &str, threads: &str| {
        let o = recur(
            &["experiment", "convergence", "--config", &cfg, "--out", out, "--threads", threads],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for artifact in ["rows.csv", "summary.csv", "config-echo.json", "timings.csv"] {
            assert!(tmp.path().join(out).join(artifact).exists(), "missing {artifact}");
        }
        fs::read(tmp.path().join(out).join("rows.csv")).unwrap()
    };
    let one = rows("w1", "1");
    let eight = rows("w8", "8");
    assert_eq!(one, eight, "rows.csv differs across worker counts");

    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("w1/config-echo.json")).unwrap())
            .unwrap();
    assert!(echo["given"].is_object());
    assert_eq!(echo["resolved"]["replicates"], 3);
    assert_eq!(echo["resolved"]["threshold_fracs"][1], 0.02);
}

#[test]
fn experiment_name_must_match_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "exp.json",
        r#"{
            "experiment": "convergence",
            "params": {"alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0, "n": 1000}
        }"#,
    );
    let o = recur(&["experiment", "threshold", "--config", &cfg], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn verify_writes_passing_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = recur(&["verify", "--seed", "7", "--out", "v"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("v/verify_report.json")).unwrap())
            .unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 7);
    assert!(checks.iter().all(|c| c["pass"].as_bool().unwrap()));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("PASS mean_curve_z0"), "{stderr}");
}
