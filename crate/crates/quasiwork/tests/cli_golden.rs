//! End-to-end checks of the command-line binary: golden-file regression for
//! the emitted CSVs, byte-for-byte determinism, seed handling, and the exit
//! code contract (0 success, 2 configuration, 3 numerical).

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasiwork"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

fn single_time() -> String {
    format!("t_list={}", 7.0 * PI / 6.0)
}

#[test]
fn charfn_trace_matches_golden_and_reruns_identically() {
    let t_arg = single_time();
    let args = ["charfn", "--set", &t_arg, "--set", "n_points=16"];
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert!(run_in(first.path(), &args).status.success());
    assert!(run_in(second.path(), &args).status.success());

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/charfn_single");
    let trace = read(first.path(), "trace_00.csv");
    assert_eq!(
        trace,
        std::fs::read(golden.join("trace_00.csv")).expect("committed golden trace"),
        "trace_00.csv deviates from the golden copy"
    );
    assert_eq!(trace, read(second.path(), "trace_00.csv"), "rerun differs");
}

#[test]
fn figure_files_are_deterministic() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert!(run_in(first.path(), &["figures"]).status.success());
    assert!(run_in(second.path(), &["figures"]).status.success());
    for name in [
        "fig3a.csv",
        "fig3b.csv",
        "fig4.csv",
        "fig5.csv",
        "fig6.csv",
        "fig7.csv",
        "fig8.csv",
    ] {
        assert_eq!(
            read(first.path(), name),
            read(second.path(), name),
            "{name} not deterministic"
        );
    }
}

#[test]
fn noise_study_is_seeded_and_reproducible() {
    let t_arg = single_time();
    let base = ["noise-study", "--set", &t_arg, "--set", "trials=20"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), &base).status.success());
    assert!(run_in(b.path(), &base).status.success());
    let mut reseeded: Vec<&str> = base.to_vec();
    reseeded.extend_from_slice(&["--seed", "7"]);
    assert!(run_in(c.path(), &reseeded).status.success());

    let ra = read(a.path(), "noise_report.txt");
    assert_eq!(ra, read(b.path(), "noise_report.txt"), "same seed must agree");
    assert_ne!(ra, read(c.path(), "noise_report.txt"), "new seed must differ");
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["kdq", "--set", "omega_typo=1"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("omega_typo"), "stderr: {stderr}");
}

#[test]
fn invalid_parameter_value_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["kdq", "--set", "omega_rabi=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_rabi"));
}

#[test]
fn missing_config_file_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["kdq", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_override_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["kdq", "--set", "justakey"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("key=value"));
}

#[test]
fn window_wider_than_grid_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--set", "n_points=16", "--set", "window=17"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn preset_flag_is_applied_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["kdq", "--preset", "paper"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = String::from_utf8(read(dir.path(), "manifest.txt")).unwrap();
    assert!(manifest.contains("subcommand kdq"));
    assert!(manifest.contains("preset = paper"));
    assert!(!manifest.contains("omega_rabi = 1.00000000000000000e0"));
    let kdq = String::from_utf8(read(dir.path(), "kdq.csv")).unwrap();
    assert!(kdq.starts_with("t,i,f,w,re_q,im_q\n"));
}
