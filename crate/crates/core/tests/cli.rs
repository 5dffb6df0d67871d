use std::path::Path;
use std::process::{Command, Output};

use mcqst::bench;
use mcqst::measure::ShotRecord;
use serde_json::Value;

fn mcqst(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcqst")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success() || !out.stdout.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn simulate_then_reconstruct_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcqst(&["simulate", "--haar", "2", "--seed", "4", "--shots", "50000", "--out", "rec.json"], dir.path());
    assert!(out.status.success());
    let records: Vec<ShotRecord> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.json")).unwrap()).unwrap();
    assert_eq!(records.len(), 5);
    assert_eq!(records.iter().map(|r| r.shots).sum::<u64>(), 50_000);

    let res = json(&mcqst(&["reconstruct", "--records", "rec.json"], dir.path()));
    assert_eq!(res["settings_used"], 5);
    assert_eq!(res["shots_used"], 50_000);
    assert_eq!(res["estimate"]["n"], 2);

    let purity = json(&mcqst(&["purity-check", "--records", "rec.json"], dir.path()));
    assert_eq!(purity["verdict"], "pure");
}

#[test]
fn reconstruct_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let res = json(&mcqst(&["reconstruct", "--haar", "3", "--exact"], dir.path()));
    assert!(res["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);

    let res = json(&mcqst(&["reconstruct", "--ghz", "3", "--rotation", "--shots", "2.1e6", "--noise", "0.02653"], dir.path()));
    assert_eq!(res["flags"]["rotated"], true);
    assert!(res["fidelity"].as_f64().unwrap() > 0.9);

    let res = json(&mcqst(&["reconstruct", "--haar", "2", "--protocol", "fivebasis", "--shots", "100000"], dir.path()));
    assert_eq!(res["settings_used"], 5);

    let failed = mcqst(&["reconstruct", "--ghz", "3"], dir.path());
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("vanishing"));
}

#[test]
fn complete_and_purity_from_partial_matrix() {
    let dir = tempfile::tempdir().unwrap();
    // Rank-1 matrix of (1, 2) with the (1, 1) entry missing.
    std::fs::write(
        dir.path().join("pm.json"),
        r#"{"dim":2,"re":[1,2,2,0],"im":[0,0,0,0],"known":[true,true,true,false]}"#,
    )
    .unwrap();
    let res = json(&mcqst(&["complete", "--input", "pm.json"], dir.path()));
    assert_eq!(res["feasibility"]["status"], "complete");
    assert_eq!(res["matrix"]["re"][3], 4.0);

    std::fs::write(
        dir.path().join("mixed.json"),
        r#"{"dim":2,"re":[0.5,0,0,0.5],"im":[0,0,0,0],"known":[true,true,true,true]}"#,
    )
    .unwrap();
    let out = mcqst(&["purity-check", "--input", "mixed.json"], dir.path());
    assert!(!out.status.success());
    assert_eq!(json(&out)["verdict"], "impure");
}

#[test]
fn bench_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"n_range":[2],"shots_range":[2000],"trials":3,"seed":5}"#).unwrap();
    for out in ["a.csv", "b.csv"] {
        assert!(mcqst(&["bench", "run", "--config", "cfg.json", "--out", out], dir.path()).status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(bench::read_csv(a.as_slice()).unwrap().len(), 6);

    let out = mcqst(&["bench", "run", "--config", "cfg.json", "--out", "c.csv", "--seed", "6"], dir.path());
    assert!(out.status.success());
    assert_ne!(a, std::fs::read(dir.path().join("c.csv")).unwrap());

    assert!(mcqst(&["bench", "run", "--config", "cfg.json", "--out", "e.json", "--exact"], dir.path()).status.success());
    let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r["N_total"] == "exact" && r["infidelity"].as_f64().unwrap() < 1e-9));
}
