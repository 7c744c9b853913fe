use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn magel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magel")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"{"n": 16, "dt": 0.001, "t_end": 0.01, "snapshot_every": 5}"#;

#[test]
fn usage_errors() {
    assert_eq!(code(&magel(&["--help"])), 0);
    assert_eq!(code(&magel(&[])), 2);
    assert_eq!(code(&magel(&["fly"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(code(&magel(&["scenario", "warp_drive", cfg.to_str().unwrap()])), 2);
    let bad = write_config(dir.path(), r#"{"n": 16, "colour": "red"}"#);
    let o = magel(&["run", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(code(&magel(&["run", dir.path().join("nope.json").to_str().unwrap()])), 2);
}

#[test]
fn run_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = magel(&["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--seed", "3", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(out.join("diagnostics.csv").exists());
    let snap = out.join("snapshots").join("snap_000010.bin");
    let o = magel(&["inspect", snap.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("sphere_res"));
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"{}\n").unwrap();
    assert_eq!(code(&magel(&["inspect", junk.to_str().unwrap()])), 2);
}

#[test]
fn scenario_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 16, "dt": 0.001, "t_end": 0.01, "initial_data": "harmonic_map"}"#);
    assert_eq!(code(&magel(&["scenario", "constraint_audit", cfg.to_str().unwrap(), "--out-dir", out])), 0);
    assert!(Path::new(out).join("verdict.json").exists());
    // far too short for the functional to drop by 10%
    let cfg = write_config(dir.path(), r#"{"n": 16, "dt": 0.001, "t_end": 0.002, "formulation": "B"}"#);
    assert_eq!(code(&magel(&["scenario", "decay_small_data", cfg.to_str().unwrap(), "--out-dir", out])), 1);
}

#[test]
fn numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), r#"{"n": 16, "dt": 1.0, "t_end": 2.0, "amplitude": 0.5}"#);
    let o = magel(&["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let o = magel(&["scenario", "lifespan_probe", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}
