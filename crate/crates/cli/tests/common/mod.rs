#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_echobeat")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("ECHOBEAT_LOG")
        .output()
        .expect("spawn echobeat")
}

pub fn run_with_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .env_remove("ECHOBEAT_LOG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn echobeat");
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

/// Runs and panics with stderr on a nonzero exit.
pub fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

/// Validation errors of `instance` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let path = schema_dir().join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(instance).map(|e| e.to_string()).collect()
}

pub fn assert_valid(name: &str, instance: &Value) {
    let errs = schema_errors(name, instance);
    assert!(errs.is_empty(), "{name}: {errs:?}\n{instance}");
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// synth → decode → beats → report into `dir`, returning the study report.
pub fn pipeline(dir: &Path, extra_synth: &[&str]) -> Value {
    let mut synth = vec!["synth", "--out", s(dir)];
    synth.extend_from_slice(extra_synth);
    ok(&synth);
    let cal = dir.join("calibration.json");
    ok(&[
        "decode",
        "--heatmaps",
        s(&dir.join("heatmaps.eht")),
        "--calibration",
        s(&cal),
        "--out",
        s(&dir.join("frames.jsonl")),
    ]);
    ok(&[
        "beats",
        "--frames",
        s(&dir.join("frames.jsonl")),
        "--calibration",
        s(&cal),
        "--out",
        s(&dir.join("beats.json")),
    ]);
    ok(&[
        "report",
        "--beats",
        s(&dir.join("beats.json")),
        "--csv",
        s(&dir.join("pred.csv")),
        "--out",
        s(&dir.join("study.json")),
    ]);
    read_json(&dir.join("study.json"))
}
