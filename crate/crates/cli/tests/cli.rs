use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rank1"));
    c.env_remove("RANK1_OUT_DIR");
    c
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn write_spec(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(sub: &str, spec: &Path, out: &Path) -> Output {
    bin().args([sub, "--spec"]).arg(spec).arg("--out").arg(out).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn identity_spec() -> Value {
    serde_json::json!({
        "kind": "weak-limit",
        "schedule": {"named": {"kind": "staircase34", "params": {"depth": 4}}},
        "params": {
            "family": {"functions": [{"type": "random-level-set", "stage": 2, "cells": 8, "count": 3}]},
            "times": {"rule": "zero", "count": 4},
            "target": {"alpha": 1.0},
            "threshold": 1e-9,
            "rule": "max"
        }
    })
}

#[test]
fn stage_audit_reports_exact_towers() {
    let tmp = TempDir::new().unwrap();
    let out = run("stage-audit", &specs_dir().join("stage_audit.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&tmp.path().join("stage-audit.json"));
    let t2 = &r["results"]["towers"][1];
    assert_eq!(t2["height"], "3/1");
    assert_eq!(t2["measure"], "3/2");
    assert_eq!(r["pass"], true);
    assert!(tmp.path().join("stage-audit.timing.json").exists());
    // Timing never leaks into the report.
    assert!(!std::fs::read_to_string(tmp.path().join("stage-audit.json")).unwrap().contains("wall_clock"));
}

#[test]
fn zero_times_give_zero_residuals() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "id.json", &identity_spec());
    let out = run("weak-limit", &spec, &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&tmp.path().join("o/weak-limit.json"));
    assert_eq!(r["checks"][0]["value"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(tmp.path().join("o/weak-limit.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    let header = lines.find(|l| !l.starts_with('#')).unwrap();
    assert!(header.contains(','));
    assert_eq!(lines.count(), 4);
}

#[test]
fn failed_threshold_exits_one() {
    let tmp = TempDir::new().unwrap();
    let mut v = identity_spec();
    v["params"]["target"]["alpha"] = 0.0.into();
    let spec = write_spec(tmp.path(), "bad.json", &v);
    let out = run("weak-limit", &spec, tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert_eq!(read_json(&tmp.path().join("weak-limit.json"))["pass"], false);
}

#[test]
fn invalid_spec_exits_two_and_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let mut v = identity_spec();
    v["sede"] = 3.into();
    let spec = write_spec(tmp.path(), "typo.json", &v);
    let out = run("weak-limit", &spec, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));

    let mut v = identity_spec();
    v["params"]["treshold"] = 0.1.into();
    let spec = write_spec(tmp.path(), "typo2.json", &v);
    let out = run("weak-limit", &spec, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("treshold"));
}

#[test]
fn missing_spec_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = run("spectrum", &tmp.path().join("absent.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn env_var_sets_the_output_directory() {
    let tmp = TempDir::new().unwrap();
    let target = tmp.path().join("from-env");
    let out = bin()
        .args(["stage-audit", "--spec"])
        .arg(specs_dir().join("stage_audit.json"))
        .env("RANK1_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("stage-audit.json").exists());

    // An explicit flag wins over the environment.
    let flag = tmp.path().join("from-flag");
    let out = bin()
        .args(["stage-audit", "--spec"])
        .arg(specs_dir().join("stage_audit.json"))
        .arg("--out")
        .arg(&flag)
        .env("RANK1_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag.join("stage-audit.json").exists());
}

#[test]
fn plot_subcommand_rewrites_csv() {
    let tmp = TempDir::new().unwrap();
    let out = run("stage-audit", &specs_dir().join("stage_audit.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = tmp.path().join("again.csv");
    let out = bin()
        .arg("plot")
        .arg("--report")
        .arg(tmp.path().join("stage-audit.json"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(tmp.path().join("stage-audit.csv")).unwrap());
}

#[test]
fn empty_sequence_csv_is_header_only() {
    let tmp = TempDir::new().unwrap();
    let out = run("stage-audit", &specs_dir().join("stage_audit.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let mut r = read_json(&tmp.path().join("stage-audit.json"));
    r["plot"]["rows"] = Value::Array(vec![]);
    let report = write_spec(tmp.path(), "empty.json", &r);
    let csv = tmp.path().join("empty.csv");
    let out = bin().arg("plot").arg("--report").arg(&report).arg("--out").arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1);
    assert!(data[0].starts_with("n,"));
}

#[test]
fn plot_without_plot_data_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let out = run("stage-audit", &specs_dir().join("stage_audit.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let mut r = read_json(&tmp.path().join("stage-audit.json"));
    r.as_object_mut().unwrap().remove("plot");
    let report = write_spec(tmp.path(), "noplot.json", &r);
    let out =
        bin().arg("plot").arg("--report").arg(&report).arg("--out").arg(tmp.path().join("x.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "id.json", &identity_spec());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run("weak-limit", &spec, &a).status.code(), Some(0));
    assert_eq!(run("weak-limit", &spec, &b).status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("weak-limit.json")).unwrap(), std::fs::read(b.join("weak-limit.json")).unwrap());
}
