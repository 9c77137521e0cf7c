use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedonic-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CHASE: &str = r#"{"n": 2, "utilities": [[0, -1], [1, 0]]}"#;

#[test]
fn oracle_finds_no_nash_partition_for_run_and_chase() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "g.json", CHASE);
    let o = lab(&["oracle", "--game", &game, "--concept", "nash"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no nash partition exists"));
    let o = lab(&["oracle", "--game", &game, "--concept", "nash", "--count"]);
    assert_eq!(stdout(&o).trim(), "0");
    let o = lab(&["oracle", "--game", &game, "--concept", "contractual-individual"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coalitions"], serde_json::json!([[0, 1]]));
}

#[test]
fn sample_then_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("g.json");
    let o = lab(&["sample", "--n", "5", "--seed", "12", "--out", game.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let again = lab(&["sample", "--n", "5", "--seed", "12"]);
    assert_eq!(fs::read_to_string(&game).unwrap().trim(), stdout(&again).trim());
    let part = write(dir.path(), "p.json", r#"{"coalitions": [[0, 1, 2, 3, 4]]}"#);
    let o = lab(&["check", "--game", game.to_str().unwrap(), "--partition", &part]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["nash", "individual", "exit-denied"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn strict_check_reports_violation_status() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "g.json", CHASE);
    let part = write(dir.path(), "p.json", r#"{"coalitions": [[0], [1]]}"#);
    let o = lab(&[
        "check",
        "--game",
        &game,
        "--partition",
        &part,
        "--concept",
        "nash",
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = lab(&[
        "check",
        "--game",
        &game,
        "--partition",
        &part,
        "--concept",
        "individually-rational",
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn input_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(
        lab(&["oracle", "--game", missing.to_str().unwrap(), "--concept", "nash"])
            .status
            .code(),
        Some(2)
    );
    let bad = write(dir.path(), "bad.json", r#"{"n": 2, "utilities": [[0, 1]]}"#);
    assert_eq!(
        lab(&["oracle", "--game", &bad, "--concept", "nash"]).status.code(),
        Some(2)
    );
    let game = write(dir.path(), "g.json", CHASE);
    assert_eq!(
        lab(&["oracle", "--game", &game, "--concept", "popular"]).status.code(),
        Some(2)
    );
    assert_eq!(lab(&["bounds", "--formula", "no-such-formula"]).status.code(), Some(2));
    assert_eq!(
        lab(&["mc", "--kind", "MC_GRAND", "--n", "4", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(lab(&["run-alg", "--n", "50", "--tau", "1.5"]).status.code(), Some(2));
    assert_eq!(lab(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn run_alg_writes_partition_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let part = dir.path().join("p.json");
    let report = dir.path().join("r.json");
    let o = lab(&[
        "run-alg",
        "--n",
        "400",
        "--seed",
        "3",
        "--groups",
        "4",
        "--compat",
        "1",
        "--out-partition",
        part.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let combined: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(&part).unwrap()).unwrap();
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(combined["partition"], p);
    assert_eq!(combined["report"], r);
    assert_eq!(r["n"], 400);
    assert_eq!(r["groups"], 4);
    let covered: usize = p["coalitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_array().unwrap().len())
        .sum();
    assert_eq!(covered, 400);
}

#[test]
fn bounds_formula_prints_value() {
    let o = lab(&["bounds", "--formula", "nash-composite", "--params", "n=3,k=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).trim().ends_with("= 0.533203125"), "{}", stdout(&o));
}

#[test]
fn mc_exports_are_deterministic_and_layered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "kind = MC_GRAND\nn = 4, 6\ntrials = 500\nseed = 1\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = lab(&[
            "mc",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = lab(&["mc", "--config", &cfg, "--trials", "7", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["trials"] == 7));
}
