//! End-to-end runs of the installed binary: exit codes, artifact layout,
//! determinism across reruns and worker counts, and the flag/environment
//! contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

/// Command for the binary under test with a scrubbed NULLWAVE_* environment,
/// so ambient variables never leak into a test.
fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nullwave"));
    for var in [
        "NULLWAVE_CONFIG",
        "NULLWAVE_OUT",
        "NULLWAVE_SEED",
        "NULLWAVE_WORKERS",
        "NULLWAVE_ENSEMBLE",
    ] {
        c.env_remove(var);
    }
    c
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited by signal")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn accept_quick_is_byte_identical_across_reruns() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [d1.path(), d2.path()] {
        let out = bin()
            .args(["accept", "--quick", "--seed", "7", "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<String> = fs::read_dir(d1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(
        names.len() >= 11,
        "expected one table per criterion plus the summary, got {names:?}"
    );
    for n in &names {
        assert_eq!(read(d1.path(), n), read(d2.path(), n), "{n} differs between reruns");
    }
    assert_eq!(read(d1.path(), "config.json"), read(d2.path(), "config.json"));
}

#[test]
fn out_of_range_hurst_is_rejected_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"hurst": {"h1": 1.2, "h2": 0.8}}"#).unwrap();
    let out = bin()
        .args(["accept", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_keys_are_rejected_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    fs::write(&cfg, r#"{"grid": {"half_width": 16.0, "n": 64, "typo": 1}}"#).unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn stochastic_subcommands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unseeded.json");
    fs::write(&cfg, r#"{"base_seed": null}"#).unwrap();
    let out = bin()
        .args(["sample-fbs", "--ensemble", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_writes_trace_solution_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let trace = String::from_utf8(read(dir.path(), "trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,increment,factor\n"));
    assert!(trace.contains("final,converged,true"));

    let payload = read(dir.path(), "solution.f64le");
    assert_eq!(payload.len(), 2 * 128 * 128 * 16, "two complex components");
    let header: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "solution.json")).unwrap();
    assert_eq!(header["n"], 128);
    assert_eq!(header["components"], 2);
    assert_eq!(header["frame"], "null");

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["base_seed"], 11);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_seconds"].as_f64().unwrap() >= 0.0);
    let listed: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for required in ["config.json", "trace.csv", "solution.f64le", "solution.json"] {
        assert!(listed.contains(&required), "manifest misses {required}");
    }
}

#[test]
fn worker_count_never_changes_results() {
    let d1 = tempfile::tempdir().unwrap();
    let d4 = tempfile::tempdir().unwrap();
    for (d, w) in [(d1.path(), "1"), (d4.path(), "4")] {
        let out = bin()
            .args(["sample-fbs", "--seed", "5", "--ensemble", "8", "--workers", w, "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(d1.path(), "sheets.csv"), read(d4.path(), "sheets.csv"));
    assert_eq!(read(d1.path(), "moments.csv"), read(d4.path(), "moments.csv"));
    assert_eq!(read(d1.path(), "sheet0.f64le"), read(d4.path(), "sheet0.f64le"));
}

#[test]
fn environment_variables_mirror_flags_and_flags_win() {
    let by_env = tempfile::tempdir().unwrap();
    let by_flag = tempfile::tempdir().unwrap();
    let out = bin()
        .env("NULLWAVE_SEED", "9")
        .env("NULLWAVE_ENSEMBLE", "4")
        .env("NULLWAVE_OUT", by_env.path())
        .arg("sample-fbs")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["sample-fbs", "--seed", "9", "--ensemble", "4", "--out"])
        .arg(by_flag.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(read(by_env.path(), "sheets.csv"), read(by_flag.path(), "sheets.csv"));

    let flag_beats_env = tempfile::tempdir().unwrap();
    let out = bin()
        .env("NULLWAVE_SEED", "1")
        .args(["sample-fbs", "--seed", "9", "--ensemble", "4", "--out"])
        .arg(flag_beats_env.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(
        read(flag_beats_env.path(), "sheets.csv"),
        read(by_flag.path(), "sheets.csv")
    );
}

#[test]
fn verification_subcommands_pass_on_the_default_configuration() {
    for (cmd, table) in [
        ("verify-norms", "norms.csv"),
        ("verify-inverse", "inverse.csv"),
        ("verify-composition", "composition.csv"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args([cmd, "--seed", "13", "--ensemble", "6", "--workers", "2", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{cmd} stderr: {}", String::from_utf8_lossy(&out.stderr));
        let body = String::from_utf8(read(dir.path(), table)).unwrap();
        assert!(!body.contains("false"), "{cmd} reported a failing row:\n{body}");
    }
}

#[test]
fn glue_reports_chart_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["glue", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = String::from_utf8(read(dir.path(), "glue.csv")).unwrap();
    assert!(body.contains("success true"), "glue table:\n{body}");
}
