//! End-to-end tests of the focktomo binary: file shapes, determinism,
//! round trips, error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_focktomo"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("focktomo-cli-{}-{}", tag, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn simulate_default_counts_match_reference_run() {
    let dir = tmp_dir("counts");
    let out = run(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--n0-count",
        "1000",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // header + rows
    assert_eq!(line_count(&dir.join("samples_n1.csv")), 180_001);
    assert_eq!(line_count(&dir.join("samples_n2.csv")), 105_001);
    assert_eq!(line_count(&dir.join("samples_n0.csv")), 1_001);
    assert!(dir.join("manifest.txt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_rejects_zero_count() {
    let dir = tmp_dir("zero");
    let out = run(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--n1-count",
        "0",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn same_seed_rerun_is_byte_identical() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "simulate",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "99",
            "--n0-count",
            "500",
            "--n1-count",
            "2000",
            "--n2-count",
            "800",
        ]);
        assert!(out.status.success());
    }
    for name in [
        "samples_n0.csv",
        "samples_n1.csv",
        "samples_n2.csv",
        "manifest.txt",
    ] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

fn simulate_small(dir: &Path) {
    let out = run(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "5",
        "--n0-count",
        "4000",
        "--n1-count",
        "6000",
        "--n2-count",
        "3000",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn reconstruct_moments_writes_two_line_params() {
    let dir = tmp_dir("moments");
    simulate_small(&dir);
    let out = run(&[
        "reconstruct",
        "--out",
        dir.to_str().unwrap(),
        "--method",
        "moments",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("params_moments_n1.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("delta="));
    assert!(lines[1].starts_with("sigma2="));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reconstruct_radon_grid_has_4096_rows() {
    let dir = tmp_dir("radon");
    simulate_small(&dir);
    let out = run(&[
        "reconstruct",
        "--out",
        dir.to_str().unwrap(),
        "--method",
        "radon",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(line_count(&dir.join("wigner_radon_n2.csv")), 4097);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn method_all_produces_table_shaped_report() {
    let dir = tmp_dir("all");
    simulate_small(&dir);
    let out = run(&[
        "reconstruct",
        "--out",
        dir.to_str().unwrap(),
        "--method",
        "all",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
    for row in ["raw", "corrected", "ideal"] {
        for key in ["min_w2", "w2_origin", "min_w1", "w1_origin"] {
            assert!(
                report.contains(&format!("{row}_{key}=")),
                "missing {row}_{key} in report:\n{report}"
            );
        }
    }
    assert!(report.contains("delta_mismatch_percent="));
    // keys are sorted
    let keys: Vec<&str> = report
        .lines()
        .map(|l| l.split('=').next().unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // the ideal block is model-only and pinned by the closed forms
    let get = |key: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(&format!("{key}=")))
            .and_then(|l| l.split('=').nth(1))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("ideal_min_w2") + 0.1318).abs() < 5e-4);
    assert!((get("ideal_w2_origin") - 0.3183).abs() < 5e-5);
    assert!((get("ideal_w1_origin") + 0.3183).abs() < 5e-5);

    // report is stable under rerun
    let before = std::fs::read(dir.join("report.txt")).unwrap();
    let out = run(&["report", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let after = std::fs::read(dir.join("report.txt")).unwrap();
    assert_eq!(before, after);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_without_reconstruction_fails() {
    let dir = tmp_dir("no-recon");
    let out = run(&["report", "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_sample_row_reports_line_number() {
    let dir = tmp_dir("malformed");
    simulate_small(&dir);
    // corrupt one row of the n1 file
    let path = dir.join("samples_n1.csv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("n1,0.5,not-a-number\n");
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "reconstruct",
        "--out",
        dir.to_str().unwrap(),
        "--method",
        "moments",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":6002:"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_flag_and_command_fail_cleanly() {
    let out = run(&["simulate", "--bogus", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    let out = run(&["frobnicate"]);
    assert!(!out.status.success());
}

#[test]
fn thread_cap_is_honored_and_validated() {
    let dir = tmp_dir("threads");
    let out = bin()
        .env("FOCKTOMO_THREADS", "2")
        .args([
            "simulate",
            "--out",
            dir.to_str().unwrap(),
            "--n0-count",
            "100",
            "--n1-count",
            "100",
            "--n2-count",
            "100",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .env("FOCKTOMO_THREADS", "zero")
        .arg("selftest")
        .output()
        .unwrap();
    assert!(!out.status.success());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn thread_count_does_not_change_output() {
    let dir_a = tmp_dir("t1");
    let dir_b = tmp_dir("t8");
    for (dir, threads) in [(&dir_a, "1"), (&dir_b, "8")] {
        let out = bin()
            .env("FOCKTOMO_THREADS", threads)
            .args([
                "simulate",
                "--out",
                dir.to_str().unwrap(),
                "--seed",
                "77",
                "--n0-count",
                "5000",
                "--n1-count",
                "5000",
                "--n2-count",
                "5000",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    for name in ["samples_n0.csv", "samples_n1.csv", "samples_n2.csv"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} depends on thread count");
    }
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn selftest_prints_one_line_per_criterion() {
    let out = run(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8, "{text}");
    for line in &lines {
        assert!(
            line.starts_with("PASS") || line.starts_with("FAIL"),
            "{line}"
        );
    }
    // exit status reflects the per-criterion outcomes
    let any_fail = lines.iter().any(|l| l.starts_with("FAIL"));
    assert_eq!(out.status.success(), !any_fail);
}
