//! Black-box tests of the binary: exit codes, determinism of exported
//! artifacts, config round-trips.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treeflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn treeflow")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treeflow-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        run(&["axioms", "--operator", "parabolic"]).status.code(),
        Some(1)
    );

    // passing check
    assert_eq!(
        run(&["axioms", "--operator", "mean", "--m", "3", "--samples", "200", "--seed", "7"])
            .status
            .code(),
        Some(0)
    );
    // failing mathematical check: the pure median is not strictly sub-maximal
    assert_eq!(
        run(&["axioms", "--operator", "median-mean", "--alpha", "1.0", "--samples", "200"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn domain_errors_are_usage_errors() {
    // p < 1 is outside the operator's domain
    assert_eq!(
        run(&["axioms", "--operator", "p-average", "--p", "0.5"]).status.code(),
        Some(1)
    );
    // vertex budget exceeded
    assert_eq!(
        run(&["solve", "--m", "10", "--depth", "12", "--T", "0.1"]).status.code(),
        Some(1)
    );
}

#[test]
fn solve_outputs_are_deterministic() {
    let dir = scratch("det");
    let once = |tag: &str| -> (Vec<u8>, Vec<u8>) {
        let csv = dir.join(format!("{tag}.csv"));
        let json = dir.join(format!("{tag}.json"));
        let out = run(&[
            "solve",
            "--m", "2",
            "--depth", "3",
            "--datum", "geometric",
            "--lambda", "0.5",
            "--datum-seed", "9",
            "--T", "1",
            "--dt", "0.01",
            "--out-csv", csv.to_str().unwrap(),
            "--out-json", json.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&csv).unwrap(), fs::read(&json).unwrap())
    };
    let (csv_a, json_a) = once("a");
    let (csv_b, json_b) = once("b");
    assert_eq!(csv_a, csv_b, "field CSV must be byte-identical across runs");
    assert_eq!(json_a, json_b, "summary JSON must be byte-identical across runs");

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vertex,level,psi,t,value"));
    // 2^4 - 1 vertices x 101 nodes
    assert_eq!(lines.count(), 15 * 101);
}

#[test]
fn config_file_round_trip() {
    let dir = scratch("cfg");
    let cfg = dir.join("exp.json");
    fs::write(
        &cfg,
        r#"{
  "operator": { "kind": "p_average", "p": 3.0, "arity": 2 },
  "datum": { "kind": "geometric", "k": 1.0, "lambda": 0.5, "seed": 4 },
  "tree": { "m": 2, "depth": 3 },
  "grid": { "t_end": 1.0, "steps": 100 },
  "closure": { "kind": "geometric_envelope", "k": 1.0, "lambda": 0.5 },
  "seed": 0
}"#,
    )
    .unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // flags override the file
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--depth", "2", "--out-json", dir.join("s.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["depth"], 2);

    // malformed config is a usage error
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn eigen_check_passes_and_reports() {
    let out = run(&[
        "eigen-check", "--lambda", "0.5", "--m", "2", "--depth", "5", "--dt", "1e-3", "--T", "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn closed_form_tables() {
    let out = run(&["closed-form", "--kind", "subfactorial", "--level-max", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "n,datum\n0,1\n1,0\n2,1\n3,-2\n4,9\n5,-44");

    assert_eq!(run(&["closed-form", "--kind", "nonsense"]).status.code(), Some(1));
}
