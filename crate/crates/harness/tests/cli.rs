use std::process::Command;

use mpcstream::generate::{generate, GenParams, Kind};
use mpcstream::runner::{run, RunConfig, RunError};
use mpcstream::workload::{Header, Mode, Workload};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpcstream"))
}

#[test]
fn empty_workload_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.wl");
    Workload::new(Header::new(8, Mode::Connectivity)).save(&path).unwrap();
    let out = bin().args(["run", "--workload"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("summary"));
}

#[test]
fn generate_then_run_passes_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let wl = dir.path().join("er.wl");
    let rep = dir.path().join("er.jsonl");
    let gen = bin()
        .args(["generate", "--kind", "erdos-renyi-mixed", "--n", "32", "--batches", "6", "--batch-size", "2", "--seed", "5", "-o"])
        .arg(&wl)
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let out = bin().args(["run", "--phi", "0.9", "--workload"]).arg(&wl).arg("--report").arg(&rep).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&rep).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let batches: Vec<_> = lines.iter().filter(|v| v.get("rounds").is_some()).collect();
    assert_eq!(batches.len(), 6);
    for b in batches {
        assert_eq!(b.as_object().unwrap().len(), 5);
    }
    let summary = &lines.last().unwrap()["summary"];
    assert_eq!(summary["failures"], 0);
}

#[test]
fn tiny_machines_fail_with_accounting_exit() {
    let w = generate(&GenParams::new(Kind::ErdosRenyiMixed, 16, 2, 1, 1)).unwrap();
    let cfg = RunConfig { local_memory: Some(4), ..RunConfig::default() };
    let err = run(&w, &cfg).unwrap_err();
    assert!(matches!(err, RunError::Accounting { .. }), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.wl");
    w.save(&path).unwrap();
    let out = bin().args(["run", "--local-memory", "4", "--workload"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_workload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.wl");
    std::fs::write(&path, "n 4\nmode connectivity\nBATCH\n- 0 1\nQ\n").unwrap();
    let out = bin().args(["run", "--workload"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
