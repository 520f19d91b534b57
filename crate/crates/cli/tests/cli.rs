//! Exit codes and flag handling of the batch binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wmterrain(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmterrain"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL: &str = "[experiment]\nmaps_per_dimension = 1\nmissions_per_map = 2\nsize_px = 41\n";

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wmterrain(&["--help"], dir.path())), 0);
    assert_eq!(code(&wmterrain(&["--version"], dir.path())), 0);
    assert_eq!(code(&wmterrain(&["simulate", "--help"], dir.path())), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&wmterrain(&[], p)), 1);
    assert_eq!(code(&wmterrain(&["explode"], p)), 1);
    assert_eq!(code(&wmterrain(&["generate", "--seed", "minus one"], p)), 1);
    assert_eq!(code(&wmterrain(&["generate", "--workers", "0"], p)), 1);
    assert_eq!(code(&wmterrain(&["generate", "--size", "1"], p)), 1);
    fs::write(p.join("bad.toml"), "[experiment]\nmaps_per_dimension = \"many\"\n").unwrap();
    assert_eq!(code(&wmterrain(&["config", "-c", "bad.toml"], p)), 1);
    fs::write(p.join("typo.toml"), "[experimnet]\nseed = 1\n").unwrap();
    assert_eq!(code(&wmterrain(&["config", "-c", "typo.toml"], p)), 1);
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("small.toml"), SMALL).unwrap();
    assert_eq!(code(&wmterrain(&["config", "-c", "absent.toml"], p)), 2);
    for stage in ["analyze", "sample", "simulate", "report"] {
        let out = wmterrain(&[stage, "-c", "small.toml", "--out", "empty"], p);
        assert_eq!(code(&out), 2, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn internal_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("small.toml"), SMALL).unwrap();
    // The output directory path is an existing regular file.
    fs::write(p.join("blocked"), "").unwrap();
    assert_eq!(code(&wmterrain(&["generate", "-c", "small.toml", "--out", "blocked"], p)), 3);
    // A corrupted results file.
    assert_eq!(code(&wmterrain(&["generate", "-c", "small.toml", "--out", "o"], p)), 0);
    assert_eq!(code(&wmterrain(&["analyze", "-c", "small.toml", "--out", "o"], p)), 0);
    fs::write(p.join("o/results.csv"), "map_id,dimension\nx,not-a-number\n").unwrap();
    assert_eq!(code(&wmterrain(&["report", "-c", "small.toml", "--out", "o"], p)), 3);
}

#[test]
fn stages_run_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("small.toml"), SMALL).unwrap();
    let out = wmterrain(&["config", "-c", "small.toml", "--seed", "9", "--size", "33", "--workers", "2"], p);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 9"));
    assert!(text.contains("size_px = 33"));
    assert!(text.contains("workers = 2"));
    assert!(text.contains("missions_per_map = 2"));

    let common = ["-c", "small.toml", "--out", "run", "--seed", "5", "--workers", "1"];
    for stage in ["generate", "analyze", "sample", "simulate", "report"] {
        let mut args = vec![stage];
        args.extend(common);
        let out = wmterrain(&args, p);
        assert_eq!(code(&out), 0, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(p.join("run/summary.csv").exists());
    assert!(p.join("run/maps/d2.45_m00.png").exists());

    let mut args = vec!["run"];
    args.extend(common);
    args[4] = "again";
    let out = wmterrain(&args, p);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("success_rate"));
    assert_eq!(
        fs::read(p.join("run/summary.csv")).unwrap(),
        fs::read(p.join("again/summary.csv")).unwrap()
    );

    let out = wmterrain(&["simulate", "-c", "small.toml", "--out", "logged", "--logs"], p);
    assert_eq!(code(&out), 2);
}
