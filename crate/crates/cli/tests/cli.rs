//! End-to-end tests of the `absf` binary on a small scenario.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn absf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absf"))
        .args(args)
        .env("ABSF_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("scenario.json");
    fs::write(
        &config,
        r#"{
            "deployment": {"kind": "grid", "n": 3, "isd_m": 50.0},
            "groups": {"count": 4, "sizes": {"kind": "fixed", "users": 2}},
            "sim": {"duration_s": 2.0, "t_interval_ms": 500, "batches": 4},
            "policies": ["legacy", "fixed-4/8"],
            "seeds": [1, 2]
        }"#,
    )
    .unwrap();
    config
}

#[test]
fn simulate_writes_the_result_tree() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let res = absf(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.starts_with("policy,system_throughput,jfi,ci_low,ci_high\n"), "{stdout}");

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    // header + 2 policies x 2 seeds
    assert_eq!(summary.lines().count(), 5);
    assert!(out.join("summary_pooled.csv").exists());
    assert!(out.join("manifest.json").exists());
    let runs: Vec<_> = fs::read_dir(out.join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn seed_and_policy_overrides_shrink_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let res = absf(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
        "--policy",
        "legacy",
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().starts_with("legacy,"));
}

#[test]
fn failing_runs_exit_nonzero_but_keep_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let res = absf(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "1",
        "--policy",
        "legacy",
        "--policy",
        "fixed-9/8",
    ]);
    assert!(!res.status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2, "only the legacy run succeeds");
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"ok\": false"));
}

#[test]
fn optimize_emits_probabilities_and_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let res = absf(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let probs = fs::read_to_string(out.join("probabilities.csv")).unwrap();
    assert!(probs.starts_with("state_id,prob\n"));
    let total: f64 = probs
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    let pattern = fs::read_to_string(out.join("pattern.txt")).unwrap();
    assert_eq!(pattern.lines().count(), 80);
    assert!(pattern.lines().all(|l| l.split(',').count() == 3));
}

#[test]
fn analyze_and_validate_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("analyze");
    let res = absf(&[
        "analyze",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(fs::read_to_string(out.join("state_throughput.csv"))
        .unwrap()
        .starts_with("state_id,group_id,throughput_bps\n"));

    let out = dir.path().join("validate");
    let res = absf(&[
        "validate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.starts_with("state_id,analytic_bps,sim_bps,ci_low,ci_high,within\n"), "{stdout}");
    assert!(out.join("validate_system.csv").exists());
    assert!(out.join("validate_groups.csv").exists());
}

#[test]
fn bad_configs_fail_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // missing file
    let res = absf(&[
        "simulate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.json"));
    // unknown key
    let config = dir.path().join("typo.json");
    fs::write(&config, r#"{"wrold": {"width_m": 10.0, "height_m": 10.0}}"#).unwrap();
    let res = absf(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    // unknown policy
    let res = absf(&[
        "simulate",
        "--config",
        write_config(dir.path()).to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--policy",
        "round-robin",
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("round-robin"));
}
