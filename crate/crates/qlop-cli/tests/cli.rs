//! End-to-end tests of the `qlop` binary: exit codes, report files,
//! determinism, dumps, and config handling.

use std::path::Path;
use std::process::{Command, Output};

fn qlop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlop")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn qdet_suite_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = qlop(&["check", "qdet", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let reports = qlop::report::read_report(&out.join("report.jsonl")).unwrap();
    assert!(reports.len() >= 5);
    assert!(reports.iter().all(|r| r.pass));
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let o = qlop(&["check", "relations", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    let a = qlop::report::read_report(&out1.join("report.jsonl")).unwrap();
    let b = qlop::report::read_report(&out2.join("report.jsonl")).unwrap();
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(&b) {
        assert!(ra.same_outcome(rb), "{} differs", ra.name);
    }
}

#[test]
fn broken_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        qlop(&["check", "qdet", "--tol", "1e-20", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn hadamard_above_one_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        qlop(&["check", "hadamard", "--q", "1.3", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("convergence domain"), "stderr: {err}");
}

#[test]
fn unknown_suite_exits_two() {
    let o = qlop(&["check", "nonsense"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn suite_flag_spelling_works() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        qlop(&["check", "--suite", "contraction", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_is_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("qlop.conf");
    std::fs::write(&cfg, "tol = 1e-20\n").unwrap();
    let out = dir.path().join("x");
    let o =
        qlop(&["check", "qdet", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "config tolerance applies");
    let o = qlop(&[
        "check",
        "qdet",
        "--config",
        cfg.to_str().unwrap(),
        "--tol",
        "1e-9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "flag overrides config");
}

#[test]
fn qops_two_sites_reports_t_factorization() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qops2");
    let o =
        qlop(&["check", "qops", "--sites", "2", "--cutoff", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let reports = qlop::report::read_report(&out.join("report.jsonl")).unwrap();
    let t2 =
        reports.iter().find(|r| r.name == "qops/t-factorization").expect("t-factorization record");
    assert!(t2.pass && t2.residual < 1e-8, "residual {}", t2.residual);
}

#[test]
fn dump_o_has_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dumps");
    let o = qlop(&["dump", "O", "--cutoff", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(out.join("O.qlop")).unwrap();
    assert_eq!(&bytes[0..4], b"QLOP");
    // header: magic + version + nlegs + 2 legs with 2-byte labels, then
    // the 16x16 complex payload
    assert_eq!(bytes.len(), 12 + 2 * (1 + 2 + 4) + 256 * 16);
    let meta = std::fs::read_to_string(out.join("O.meta")).unwrap();
    assert!(meta.contains("object=O"));
    assert!(meta.contains("cutoff=4"));
    let back = qlop::tensor::read_dump(&out.join("O.qlop")).unwrap();
    assert_eq!(back.dim(), 16);
}

#[test]
fn dump_q1_single_site_is_two_by_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dumps");
    let o = qlop(&["dump", "q1", "--sites", "1", "--cutoff", "30", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let back = qlop::tensor::read_dump(&out.join("Q1.qlop")).unwrap();
    assert_eq!(back.dim(), 2);
}

#[test]
fn dump_to_bad_path_exits_two() {
    let o = qlop(&["dump", "O", "--cutoff", "4", "--out", "/dev/null/nope"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_can_also_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = qlop(&[
        "check",
        "contraction",
        "--dump",
        "o",
        "--cutoff",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(&out.join("O.qlop")).exists());
}
