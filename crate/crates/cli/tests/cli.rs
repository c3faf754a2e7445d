//! End-to-end subcommand tests: exit codes, file layout, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fastdiff")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn solve_reference_writes_outputs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--config",
        config("reference.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "time_series.csv",
        "grid.csv",
        "report.json",
        "profiles.svg",
        "mass.svg",
        "snapshots/snap_00000.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"].as_bool().unwrap()));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mass_balance: PASS"), "{stdout}");
}

#[test]
fn same_config_and_seed_is_byte_identical() {
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&[
            "solve",
            "--config",
            config("benchmark.toml").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            "7",
        ]);
        assert_eq!(code(&out), 0);
        let mut blobs = Vec::new();
        for f in ["time_series.csv", "report.json", "profiles.svg", "snapshots/snap_00003.csv"] {
            blobs.push(fs::read(dir.path().join(f)).unwrap());
        }
        blobs
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn configuration_errors_exit_2() {
    // invalid hypothesis
    let text = fs::read_to_string(config("reference.toml"))
        .unwrap()
        .replace("m = 0.3333333333333333", "m = 0.5");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, text).unwrap();
    let out = run(&["solve", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("m <="));

    // unknown key with location info
    let text2 = fs::read_to_string(config("reference.toml")).unwrap() + "\nbogus_key = 1\n";
    let bad2 = dir.path().join("bad2.toml");
    fs::write(&bad2, text2).unwrap();
    let out2 = run(&["solve", "--config", bad2.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out2), 2);
    assert!(String::from_utf8_lossy(&out2.stderr).contains("bogus_key"));

    // missing file
    let out3 = run(&["solve", "--config", "/nonexistent.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out3), 2);

    // unknown tolerance override
    let out4 = run(&[
        "solve",
        "--config",
        config("reference.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--tol",
        "nonsense=1",
    ]);
    assert_eq!(code(&out4), 2);
}

#[test]
fn deliberate_violations_exit_1() {
    // undersized A1 must fail the upper-barrier check
    let text = fs::read_to_string(config("reference.toml"))
        .unwrap()
        .replace("a1_factor = 1.0", "a1_factor = 0.5")
        .replace("t_end = 1.0", "t_end = 0.2");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("violation.toml");
    fs::write(&cfg, text).unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("barrier_upper: FAIL"));

    // an unreachable tolerance also fails cleanly
    let dir2 = tempfile::tempdir().unwrap();
    let out2 = run(&[
        "solve",
        "--config",
        config("benchmark.toml").to_str().unwrap(),
        "--out",
        dir2.path().to_str().unwrap(),
        "--tol",
        "mass_balance=1e-20",
    ]);
    assert_eq!(code(&out2), 1);
}

#[test]
fn verify_reruns_checks_on_stored_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let cfg = config("reference.toml");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "stderr: {}", String::from_utf8_lossy(&v.stderr));
    assert!(out_dir.join("report_verify.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report_verify.json")).unwrap())
            .unwrap();
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"].as_bool().unwrap()));
}

#[test]
fn barrier_audit_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "barrier",
        "--config",
        config("reference.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha = 2m(q + 4/delta1^2)"));
    assert!(stdout.contains("barrier_lower_subharmonic: PASS"));
    assert!(dir.path().join("barrier_audit.csv").exists());
    assert!(dir.path().join("barrier_summary.json").exists());
}

#[test]
fn sweep_runs_all_cases_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "--config",
        config("sweep.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for k in 0..4 {
        assert!(dir.path().join(format!("case_{k:03}/report.json")).exists());
        assert!(dir.path().join(format!("case_{k:03}/case_meta.json")).exists());
    }
    assert!(dir.path().join("sweep_summary.json").exists());
}

#[test]
fn planar_solve_writes_heatmap() {
    // coarser h than the shipped config keeps this test quick
    let text = fs::read_to_string(config("planar.toml"))
        .unwrap()
        .replace("h = 0.0125", "h = 0.02");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("planar.toml");
    fs::write(&cfg, text).unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("heatmap.svg").exists());
    // planar snapshots carry x,y columns; verify falls back to the stored identity
    let v = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&v), 0);

    let text = fs::read_to_string(out_dir.join("snapshots/snap_00000.csv")).unwrap();
    assert!(text.starts_with("t,x,y,u"));
}

#[test]
fn continuation_and_expansion_smoke() {
    // trimmed-down studies exercise the subcommands end to end
    let text = fs::read_to_string(config("continuation.toml"))
        .unwrap()
        .replace("j_max = 4", "j_max = 1")
        .replace("t_end = 1.0", "t_end = 0.2")
        .replace("qhat_t_lo = 0.25", "qhat_t_lo = 0.05")
        .replace("qhat_t_hi = 1.0", "qhat_t_hi = 0.2")
        .replace("cmp_t_lo = 0.5", "cmp_t_lo = 0.1")
        .replace("cells_per_octave = 55", "cells_per_octave = 24");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cont.toml");
    fs::write(&cfg, text).unwrap();
    let out_dir = dir.path().join("cont");
    let out = run(&["continue", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    // the trimmed study needn't satisfy the full acceptance thresholds, but it
    // must complete and write its artifacts with a check-driven exit code
    assert!(code(&out) == 0 || code(&out) == 1);
    assert!(out_dir.join("continuation_report.json").exists());
    assert!(out_dir.join("qhat.svg").exists());
    assert!(out_dir.join("j_0/time_series.csv").exists());

    let etext = fs::read_to_string(config("expansion.toml"))
        .unwrap()
        .replace("radii = [2.0, 4.0, 8.0]", "radii = [2.0, 4.0]")
        .replace("t_end = 1.0", "t_end = 0.2");
    let ecfg = dir.path().join("exp.toml");
    fs::write(&ecfg, etext).unwrap();
    let exp_dir = dir.path().join("exp");
    let out = run(&["expand", "--config", ecfg.to_str().unwrap(), "--out", exp_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(exp_dir.join("expansion_report.json").exists());
}
