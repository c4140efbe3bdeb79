//! End-to-end tests of the binary: reproducibility of output files for a
//! fixed configuration (the last acceptance criterion), round trips through
//! instance files, and the exit-status contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_matsparse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("matsparse-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn criterion_12_reproducible_outputs() {
    let start = std::time::Instant::now();

    // sweep: CSV, byte-identical across reruns of the identical config
    let sweep_out = tmp("sweep.csv");
    let sweep_args = [
        "sweep",
        "rudelson",
        "--dims",
        "8,16",
        "--ks",
        "50,100",
        "--replicates",
        "20",
        "--seed",
        "7",
        "--out",
        sweep_out.to_str().unwrap(),
    ];
    let first = run(&sweep_args);
    assert!(first.status.success(), "{first:?}");
    let bytes_a = read(&sweep_out);
    let second = run(&sweep_args);
    assert!(second.status.success());
    let bytes_b = read(&sweep_out);
    assert_eq!(bytes_a, bytes_b, "sweep output differs across identical runs");
    // 2 dims x 2 ks plus two header comments and the column row
    let text = String::from_utf8(bytes_a).unwrap();
    assert_eq!(text.lines().count(), 2 + 1 + 4);
    assert!(text.starts_with("# matsparse"));
    assert!(!text.contains('\r'));

    // construct + verify: JSON, byte-identical, exit 0 on the certified bound
    let inst_out = tmp("inst.json");
    let construct_args = [
        "construct",
        "log-needed",
        "--dim",
        "8",
        "--gamma",
        "1",
        "--eps",
        "0.03125",
        "--out",
        inst_out.to_str().unwrap(),
    ];
    assert!(run(&construct_args).status.success());
    let inst_a = read(&inst_out);
    assert!(run(&construct_args).status.success());
    assert_eq!(inst_a, read(&inst_out));

    let verify_out = tmp("verify.json");
    let verify_args = [
        "verify",
        "log-needed",
        "--in",
        inst_out.to_str().unwrap(),
        "--mode",
        "exhaustive",
        "--out",
        verify_out.to_str().unwrap(),
    ];
    let v = run(&verify_args);
    assert!(v.status.success(), "verify failed: {v:?}");
    let verify_a = read(&verify_out);
    assert!(run(&verify_args).status.success());
    assert_eq!(verify_a, read(&verify_out));
    let report: serde_json::Value = serde_json::from_slice(&verify_a).unwrap();
    assert_eq!(report["certified"], serde_json::Value::Bool(true));
    assert!(report["min_error"].as_f64().unwrap() >= 0.03125);

    // sample: JSON and CSV forms both reproducible
    for format in ["json", "csv"] {
        let out = tmp(&format!("sample.{format}"));
        let args = [
            "sample",
            "rudelson",
            "--family",
            "cross-polytope",
            "--dim",
            "8",
            "--k",
            "100",
            "--replicates",
            "10",
            "--seed",
            "42",
            "--format",
            format,
            "--out",
            out.to_str().unwrap(),
        ];
        assert!(run(&args).status.success());
        let a = read(&out);
        assert!(run(&args).status.success());
        assert_eq!(a, read(&out), "{format} sample output differs");
    }

    println!(
        "acceptance 12 reproducible-outputs: PASS ({:?})",
        start.elapsed()
    );
}

#[test]
fn invalid_parameters_exit_2_with_diagnostic() {
    let out = run(&[
        "construct",
        "log-needed",
        "--dim",
        "4",
        "--gamma",
        "1",
        "--eps",
        "0.03125",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "diagnostic must be a single line: {err}");
    assert!(err.contains("dim must be >= 8"), "{err}");

    let out = run(&["verify", "lemma41", "--t", "0", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "construct",
        "cube-simplex",
        "--dim",
        "8",
        "--delta",
        "9.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("δ must be in"), "{err}");
}

#[test]
fn exit_status_encodes_property() {
    // lemma41 holds
    let out = run(&["verify", "lemma41", "--t", "4", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));

    // nonsymm search with an unreachable ε fails with status 1
    let out = run(&[
        "sample",
        "nonsymm",
        "--dim",
        "4",
        "--eps",
        "0.001",
        "--k",
        "5",
        "--max-attempts",
        "3",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // rudelson with an explicit reachable target succeeds
    let out = run(&[
        "sample",
        "rudelson",
        "--dim",
        "4",
        "--k",
        "2000",
        "--replicates",
        "20",
        "--seed",
        "2",
        "--eps",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn cube_simplex_round_trip_and_bm_verify() {
    let inst_out = tmp("cube.json");
    let construct = run(&[
        "construct",
        "cube-simplex",
        "--dim",
        "8",
        "--delta",
        "1.0",
        "--out",
        inst_out.to_str().unwrap(),
    ]);
    assert!(construct.status.success(), "{construct:?}");

    let verify_out = tmp("bm.json");
    let verify = run(&[
        "verify",
        "bm",
        "--in",
        inst_out.to_str().unwrap(),
        "--support-size",
        "15",
        "--supports",
        "10",
        "--eps",
        "0.05",
        "--seed",
        "9",
        "--out",
        verify_out.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(0), "{verify:?}");
    let report: serde_json::Value = serde_json::from_slice(&read(&verify_out)).unwrap();
    assert_eq!(report["bound"].as_f64().unwrap(), 16.0);
    assert_eq!(report["binding"], serde_json::Value::Bool(true));
    assert_eq!(report["reachable_count"].as_u64().unwrap(), 0);
    assert_eq!(report["certificates_valid"], serde_json::Value::Bool(true));

    // tampered instance files are rejected
    let mut text = String::from_utf8(read(&inst_out)).unwrap();
    assert!(text.contains("\"delta\": 1.0"));
    text = text.replace("\"delta\": 1.0", "\"delta\": 1.2");
    let bad = tmp("cube-bad.json");
    std::fs::write(&bad, text).unwrap();
    let verify = run(&[
        "verify",
        "bm",
        "--in",
        bad.to_str().unwrap(),
        "--support-size",
        "15",
        "--supports",
        "2",
        "--eps",
        "0.05",
    ]);
    assert_eq!(verify.status.code(), Some(2), "{verify:?}");
}

#[test]
fn symm_counterexample_property() {
    let out = run(&[
        "construct",
        "symm-counterexample",
        "--dim",
        "100",
        "--delta",
        "0.1",
        "--out",
        tmp("symm.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("b > 0.01·d"), "{err}");
}
