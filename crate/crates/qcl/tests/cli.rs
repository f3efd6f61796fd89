//! Black-box tests of the `qcl` binary: exit codes, config precedence,
//! manifest emission, and output formats.

use std::path::Path;
use std::process::{Command, Output};

fn qcl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcl"))
        .args(args)
        .current_dir(dir)
        .env_remove("QCL_SEED")
        .output()
        .unwrap()
}

#[test]
fn chain_exact_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcl(&["chain", "--kernel", "radial", "--steps", "2", "--exact"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("omega,lambda,prob,prob_exact\n"));
    assert!(stdout.contains(",2,7.5000000000000000e-1,3/4"), "{stdout}");
}

#[test]
fn validation_failures_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    // Off-lattice highest weight.
    let out = qcl(&["irrep", "--lambda1", "1.03", "--hbar", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("1.03"), "{err}");
    // Unknown kernel name.
    let out = qcl(&["chain", "--kernel", "spiral"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("spiral"));
    // Unknown flag.
    let out = qcl(&["irrep", "--bogus", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"steps": 2, "kernel": "radial"}"#).unwrap();
    let out = qcl(&["chain", "--config", "cfg.json"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("3/4"), "config steps not honored: {stdout}");
    // Flag overrides the file.
    let out = qcl(&["chain", "--config", "cfg.json", "--steps", "1"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("1/1"), "flag should win: {stdout}");
    // Unknown key is rejected and named.
    std::fs::write(dir.path().join("bad.json"), r#"{"steps": 2, "stepz": 3}"#).unwrap();
    let out = qcl(&["chain", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("stepz"));
}

#[test]
fn qcl_seed_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed_env: Option<&str>, seed_flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qcl"));
        cmd.args(["spherical", "--z", "0.5", "--samples", "5000", "--out", "t.csv"])
            .current_dir(dir.path())
            .env_remove("QCL_SEED");
        if let Some(s) = seed_env {
            cmd.env("QCL_SEED", s);
        }
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.status().unwrap().success());
        std::fs::read_to_string(dir.path().join("t.csv")).unwrap()
    };
    let by_env = run(Some("7"), None);
    let by_flag = run(None, Some("7"));
    let default = run(None, None);
    assert_eq!(by_env, by_flag);
    assert_ne!(by_env, default);
    // Flag beats environment.
    let both = run(Some("99"), Some("7"));
    assert_eq!(both, by_flag);
}

#[test]
fn manifest_written_even_on_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    // dt too coarse for the KS threshold: a deliberate threshold failure.
    let out = qcl(
        &[
            "sde", "--r-grid", "5", "--T", "1", "--dt", "0.25", "--N", "4000", "--seed", "1",
            "--check", "--out", "sde.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sde.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "sde");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["checks"][0]["passed"], false);
    // The result table is also still written.
    assert!(dir.path().join("sde.csv").exists());
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcl(
        &["chain", "--kernel", "radial", "--steps", "2", "--format", "json"],
        dir.path(),
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["lambda"], 2);
    assert_eq!(rows[1]["prob"], 0.75);
}

#[test]
fn qwalk_oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcl(
        &["qwalk-oracle", "--n", "4", "--r", "1", "--hbar", "1", "--check"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
