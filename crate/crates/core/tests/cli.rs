use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cclab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cclab"))
        .args(args)
        .current_dir(dir)
        .env_remove("CCLAB_MODE")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("run report is JSON")
}

fn gen(dir: &Path, kind: &str, levels: &str, file: &str) -> PathBuf {
    let out = cclab(dir, &["gen", kind, "--levels", levels, "-o", file]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(file)
}

#[test]
fn odometer_solve_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "odometer", "5", "odo.json");
    let out = cclab(dir.path(), &["solve", "odo.json", "-o", "cert.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "cclab.run/1");
    assert_eq!(r["certificate_kind"], "measure");
    assert_eq!(r["verification"], "valid");
    let out = cclab(dir.path(), &["verify", "odo.json", "cert.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["verification"], "valid");
}

#[test]
fn coboundary_compression_is_conditional() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "counterexample-coboundary", "6", "cob.json");
    let out = cclab(dir.path(), &["solve", "cob.json", "-o", "cert.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["certificate_kind"], "compression");
    assert_eq!(r["verification"], "conditional");
    let out = cclab(dir.path(), &["verify", "cob.json", "cert.json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn tampered_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "odometer", "3", "odo.json");
    assert_eq!(cclab(dir.path(), &["solve", "odo.json", "-o", "cert.json"]).status.code(), Some(0));
    let mut cert: Value = serde_json::from_slice(&std::fs::read(dir.path().join("cert.json")).unwrap()).unwrap();
    let weights = cert["levels"][0]["weights"].as_object_mut().unwrap();
    let first = weights.keys().next().unwrap().clone();
    weights.insert(first, Value::String("7/8".into()));
    std::fs::write(dir.path().join("bad.json"), serde_json::to_vec(&cert).unwrap()).unwrap();
    let out = cclab(dir.path(), &["verify", "odo.json", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["verification"], "invalid");
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"version\": 1, \"points\": [").unwrap();
    let out = cclab(dir.path(), &["solve", "broken.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!report(&out)["messages"].as_array().unwrap().is_empty());
    let out = cclab(dir.path(), &["solve", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cclab(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        gen(dir, "counterexample-smooth", "4", "t.json");
        assert_eq!(cclab(dir, &["solve", "t.json", "-o", "c.json"]).status.code(), Some(0));
    }
    for f in ["t.json", "c.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let strip = |v: Value| {
        let mut v = v;
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    let ra = strip(report(&cclab(a.path(), &["verify", "t.json", "c.json"])));
    let rb = strip(report(&cclab(b.path(), &["verify", "t.json", "c.json"])));
    assert_eq!(ra, rb);
}

#[test]
fn random_instance_with_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["a.json", "b.json"] {
        let out = cclab(dir.path(), &["gen", "smooth-transversal", "--classes", "3", "--seed", "11", "-o", f]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), std::fs::read(dir.path().join("b.json")).unwrap());
    let out = cclab(dir.path(), &["solve", "a.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["certificate_kind"], "measure");
}

#[test]
fn quotient_and_report() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "odometer", "3", "odo.json");
    let out = cclab(dir.path(), &["quotient", "odo.json", "--subrel", "000,001;010,011", "-o", "q.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let q: Value = serde_json::from_slice(&std::fs::read(dir.path().join("q.json")).unwrap()).unwrap();
    assert_eq!(q["points"].as_array().unwrap().len(), 6);
    let out = cclab(dir.path(), &["report", "odo.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("x0=1"));
}

#[test]
fn float_mode_override_still_solves() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "odometer", "3", "odo.json");
    let out = Command::new(env!("CARGO_BIN_EXE_cclab"))
        .args(["solve", "odo.json"])
        .current_dir(dir.path())
        .env("CCLAB_MODE", "float")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["certificate_kind"], "measure");
}
