use std::path::PathBuf;
use std::process::{Command, Output};

use qps_core::grover::amplitudes_from_csv;
use qps_core::operator::{export_map, parse_map};
use qps_core::perf::{surface_from_csv, surface_to_csv};
use qps_core::probabilistic::{tree_rows_from_csv, tree_rows_to_csv};
use qps_core::reversible::{log_from_csv, log_to_csv};
use qps_core::rules::{trace_steps_from_csv, trace_steps_to_csv};
use qps_core::state::RegisterLayout;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn qps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qps")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = qps(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn validate_reports_encoding() {
    let sort = data("sort.ps");
    assert_eq!(
        stdout(&["validate", "--input", &sort]),
        "deterministic: yes, reversible: yes, α=3 β=4 δ=1\n"
    );
    let toggle = data("toggle.ps");
    assert!(stdout(&["validate", "--input", &toggle]).starts_with("deterministic: yes, reversible: yes, α=1 β=1 δ=1"));
}

#[test]
fn bad_files_fail_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let dup = dir.path().join("dup.ps");
    std::fs::write(&dup, "alphabet: ab\nrule 1: a -> b\nrule 1: b -> a\ninitial: a\n").unwrap();
    let out = qps(&["validate", "--input", dup.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let empty = dir.path().join("empty.ps");
    std::fs::write(&empty, "alphabet: ab\ninitial: a\n").unwrap();
    assert_eq!(
        qps(&["validate", "--input", empty.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(qps(&["run"]).status.code(), Some(2));
    assert_eq!(qps(&["frobnicate"]).status.code(), Some(2));
    let sort = data("sort.ps");
    assert_eq!(
        qps(&["grover", "--input", &sort, "--mode", "sideways"]).status.code(),
        Some(2)
    );
    assert_eq!(qps(&["perf", "--si-max", "0"]).status.code(), Some(2));
}

#[test]
fn outputs_round_trip_through_their_parsers() {
    let sort = data("sort.ps");
    let trace = stdout(&["run", "--input", &sort]);
    assert_eq!(trace_steps_to_csv(&trace_steps_from_csv(&trace).unwrap()), trace);

    let log = stdout(&["reverse", "--input", &sort]);
    assert_eq!(log_to_csv(&log_from_csv(&log).unwrap()), log);

    let tree = stdout(&["tree", "--input", &data("binary.ps"), "--depth", "3"]);
    assert_eq!(tree_rows_to_csv(&tree_rows_from_csv(&tree).unwrap()), tree);

    let map = stdout(&["build-op", "--input", &sort]);
    assert_eq!(export_map(&parse_map(&map).unwrap()), map);

    let surface = stdout(&["perf", "--si-max", "64", "--depth", "2"]);
    assert_eq!(surface_to_csv(&surface_from_csv(&surface).unwrap()), surface);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let binary = data("binary.ps");
    let a = stdout(&["run", "--input", &binary, "--stochastic", "--seed", "9"]);
    let b = stdout(&["run", "--input", &binary, "--stochastic", "--seed", "9"]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);

    let search = data("search8.ps");
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for p in [&p1, &p2] {
        stdout(&[
            "grover",
            "--input",
            &search,
            "--shots",
            "20",
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn grover_report() {
    let search = data("search8.ps");
    let dir = tempfile::tempdir().unwrap();
    let amps = dir.path().join("amps.csv");
    let text = stdout(&[
        "grover",
        "--input",
        &search,
        "--mode",
        "uncompute",
        "--auto",
        "--shots",
        "5",
        "--amplitudes",
        amps.to_str().unwrap(),
    ]);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    let summary = &lines[3];
    assert_eq!(summary["iterations"], 2);
    assert_eq!(summary["oracle_calls"], 2);
    assert_eq!(summary["m"], 5);
    let p = summary["success_probability"].as_f64().unwrap();
    assert!((p - (5.0 * (1.0f64 / 8.0).sqrt().asin()).sin().powi(2)).abs() < 1e-9);
    assert_eq!(summary["samples"].as_array().unwrap().len(), 5);

    let csv = std::fs::read_to_string(&amps).unwrap();
    let v = amplitudes_from_csv(RegisterLayout::new(3, 1, 1).unwrap(), &csv).unwrap();
    assert!(v.is_normalized());

    let joint = stdout(&[
        "grover",
        "--input",
        &data("sort.ps"),
        "--mode",
        "joint",
        "--depth",
        "2",
        "--iterations",
        "1",
        "--neighbours",
    ]);
    let last: serde_json::Value = serde_json::from_str(joint.lines().last().unwrap()).unwrap();
    assert_eq!(last["states"], 5);
    assert_eq!(last["oracle_calls"], 2);
}

#[test]
fn dense_operator_export() {
    let text = stdout(&["build-op", "--input", &data("toggle.ps"), "--dense"]);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.matches('1').count() == 1));
}
