use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fare-alliance"));
    c.env_remove("FARE_ALLIANCE_SEED");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

#[test]
fn revenue_only_welfare_is_zero_at_zero_fares() {
    let tiny = fixture("tiny.json");
    let out = run(&["eval", tiny.to_str().unwrap(), "--fares", "0,0,0,0,0", "--weights", "0,1,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["welfare"]["total"].as_f64(), Some(0.0));
}

#[test]
fn explicit_activations_are_honoured() {
    let tiny = fixture("tiny.json");
    let out = run(&["eval", tiny.to_str().unwrap(), "--fares", "3,0.5,4,0.5,0.3", "--activations", "1010"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let acts: Vec<bool> =
        json(&out)["activations"].as_array().unwrap().iter().map(|v| v.as_bool().unwrap()).collect();
    assert_eq!(acts, vec![true, false, true, false]);

    let bad = run(&["eval", tiny.to_str().unwrap(), "--fares", "3,0.5,4,0.5,0.3", "--activations", "10"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seeded_solve_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = fixture("tiny.json");
    let mut outs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let out = run(&[
            "solve",
            tiny.to_str().unwrap(),
            "--seed",
            "7",
            "--max-evals",
            "400",
            "--omit-timing",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let report: serde_json::Value = serde_json::from_slice(&outs[0]).unwrap();
    assert!(report.get("wall_clock_seconds").is_none());
    assert_eq!(report["seed"], 7);
}

#[test]
fn seed_comes_from_the_environment() {
    let tiny = fixture("tiny.json");
    let out = bin()
        .env("FARE_ALLIANCE_SEED", "11")
        .args(["solve", tiny.to_str().unwrap(), "--max-evals", "200", "--omit-timing"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["seed"], 11);
}

#[test]
fn invalid_input_exits_with_two() {
    let tiny = fixture("tiny.json");
    let out = run(&["eval", tiny.to_str().unwrap(), "--fares", "99,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"], "invalid");

    let out = run(&["solve", tiny.to_str().unwrap(), "--algo", "simplex"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_validation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("tiny.json")).unwrap()).unwrap();
    inst["passenger_types"][0]["N"] = serde_json::json!(-5.0);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, inst.to_string()).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!json(&out)["violations"].as_array().unwrap().is_empty());
}

#[test]
fn missing_file_exits_with_four() {
    let out = run(&["eval", "/definitely/not/here.json", "--fares", "0,0,0,0,0"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"], "io");
}

#[test]
fn starved_budget_exits_with_three_and_still_reports() {
    let desk = fixture("desk.json");
    let out = run(&["solve", desk.to_str().unwrap(), "--algo", "sos2cd", "--max-evals", "1", "--omit-timing"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"], "no_result");
    assert!(json(&out)["fares"].is_object());
}

#[test]
fn gen_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = run(&["gen", "--preset", "tiny", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(run(&["validate", a.to_str().unwrap()]).status.success());
}

#[test]
fn allocate_values_splits_the_surplus() {
    let out = run(&["allocate", "--values", "3,4,10"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["delta"], 3.0);
    assert_eq!(v["phi"]["transit"], 4.5);
    assert_eq!(v["phi"]["mod"], 5.5);
}

#[test]
fn game_then_allocate_from_results() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = fixture("tiny.json");
    let game = dir.path().join("game.json");
    let transcript = dir.path().join("ibr.csv");
    let allied = dir.path().join("allied.json");
    let out = run(&[
        "game",
        tiny.to_str().unwrap(),
        "--weights-tr",
        "1,1,0",
        "--seed",
        "3",
        "--transcript",
        transcript.to_str().unwrap(),
        "--out",
        game.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&transcript).unwrap();
    assert!(csv.starts_with("round,operator,before,after"));

    let out = run(&[
        "solve",
        tiny.to_str().unwrap(),
        "--weights",
        "0,1,0",
        "--max-evals",
        "400",
        "--omit-timing",
        "--out",
        allied.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["allocate", "--from-results", game.to_str().unwrap(), allied.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let phi = v["phi"]["transit"].as_f64().unwrap() + v["phi"]["mod"].as_f64().unwrap();
    let f = v["f_allied"].as_f64().unwrap();
    assert!((phi - f).abs() <= 1e-9 * f.abs().max(1.0));
}

#[test]
fn regime_sweep_writes_one_row_per_weight() {
    let tiny = fixture("tiny.json");
    let out = run(&["regime-sweep", tiny.to_str().unwrap(), "--grid", "1,0,0;0,1,0", "--max-evals", "300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("mu_pax,mu_rev,mu_vmt,"));
}

#[test]
fn export_lp_writes_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("m.lp");
    let tiny = fixture("tiny.json");
    let out = run(&["export-lp", tiny.to_str().unwrap(), "--fares", "1,1,1,1,0.5", "--out", lp.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Maximize"));
    assert!(text.trim_end().ends_with("End"));
}
