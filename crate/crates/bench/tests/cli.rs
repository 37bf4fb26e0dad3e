mod common;

use std::fs;
use std::process::Command;

use common::{configs_dir, spec_text};

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cofbl-bench"))
}

#[test]
fn run_writes_results_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    fs::write(
        &cfg,
        spec_text(
            "trials = 5\nalgorithms = [\"CoFBL\"]",
            "[sweep]\nname = \"snr\"\nvalues = [10]",
            "",
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = bench()
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--trials",
            "1",
            "--seed",
            "3",
            "--algorithms",
            "SOMP,CoFBL",
            "--threads",
            "1",
            "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("snr,10,SOMP,0,") && csv.contains("snr,10,CoFBL,0,"));
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed: 3"));

    let replot = bench().arg("replot").arg(out_dir.join("results.csv")).output().unwrap();
    assert!(replot.status.success());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    fs::write(
        &cfg,
        spec_text(
            "trials = 1\nalgorithms = [\"CoFBL\"]",
            "[sweep]\nname = \"snr\"\nvalues = [10]",
            "",
        ),
    )
    .unwrap();
    let out = bench()
        .args(["run", cfg.to_str().unwrap(), "--algorithms", "Magic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown algorithm"));
    assert!(!dir.path().join("results").exists());

    let missing = bench().args(["run", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn list_configs_names_every_shipped_config() {
    let out = bench()
        .arg("list-configs")
        .arg("--dir")
        .arg(configs_dir())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "snr_structures",
        "timing",
        "mvdr",
        "dynamic_tracking",
        "full_scale [long]",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    assert!(!text.contains("INVALID"));
}
