use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_devs-scc")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn classes(j: &Value) -> Vec<(u64, String, String)> {
    j["sccs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            (s["id"].as_u64().unwrap(), s["ini_st"].as_str().unwrap().into(), s["in_pairs"].as_str().unwrap().into())
        })
        .collect()
}

#[test]
fn parse_exit_codes() {
    let out = run(&["parse", &fixture("elevator.devs")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("18/18/25 cases"));
    assert_eq!(run(&["parse", "--model", &fixture("soda.devs")]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.devs");
    std::fs::write(&bad, "model Bad {\n  state { n : nat; }\n  ta = ;\n}").unwrap();
    let out = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.devs:3:"));
}

#[test]
fn catalogs_match_expected_fixtures() {
    let expected: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("soda.expected.json")).unwrap()).unwrap();
    let out = run(&["criteria", "--model", &fixture("soda.devs"), "--criteria", "cases"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(classes(&json_of(&out)), classes(&expected));

    let expected: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("elevator.expected.json")).unwrap()).unwrap();
    let out = run(&[
        "criteria",
        "--model",
        &fixture("elevator.devs"),
        "--criteria-file",
        &fixture("elevator.criteria"),
        "--plan",
        &fixture("elevator.plan.json"),
    ]);
    let got = json_of(&out);
    assert_eq!(classes(&got), classes(&expected));
    assert_eq!(got["combination"]["kept"], 4);
}

#[test]
fn bad_selection_is_a_parse_error() {
    let out = run(&["criteria", "--model", &fixture("soda.devs"), "--criteria", "extensional:nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["criteria", "--model", &fixture("soda.devs"), "--criteria", "extensional:d"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires enumerated set"));
}

#[test]
fn simulate_exit_codes() {
    let out = run(&["simulate", "--model", &fixture("soda.devs"), &fixture("soda-undefined.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("undefined transition"));

    let dir = tempfile::tempdir().unwrap();
    let passive = dir.path().join("passive.json");
    let cfg = r#"{"schema": "devs-scc/1", "state": {"lamp": "off", "left": "inf"}, "event": "tau", "time": "0"}"#;
    std::fs::write(&passive, cfg).unwrap();
    let out = run(&["simulate", "--model", &fixture("toggle.devs"), passive.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let ok = dir.path().join("ok.json");
    let cfg = r#"[{"state": {"lamp": "off", "left": "inf"}, "event": "press", "time": "1"},
                  {"steps": [{"state": {"lamp": "off", "left": "inf"}, "event": "press", "time": "1"},
                             {"state": {"lamp": "on", "left": "2"}, "event": "tau", "time": "0"}]}]"#;
    std::fs::write(&ok, cfg).unwrap();
    let traces = dir.path().join("traces");
    let out =
        run(&["simulate", "--model", &fixture("toggle.devs"), ok.to_str().unwrap(), "--out", traces.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let jsonl = std::fs::read_to_string(traces.join("traces.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4);
    assert!(jsonl.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));
    let csv = std::fs::read_to_string(traces.join("traces.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("scc,events,outputs,outcome,signature"));
}

#[test]
fn campaign_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir: PathBuf = dir.path().join("soda");
    let out = run(&[
        "campaign",
        "--model",
        &fixture("soda.devs"),
        "--criteria",
        "cases",
        "--out",
        out_dir.to_str().unwrap(),
        "--probe-k",
        "3",
    ]);
    assert!(matches!(out.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "catalog.json", "configs.json", "sequences.json", "traces.jsonl", "traces.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["sizes"]["base"], 11);
    assert_eq!(report["exit_code"].as_i64(), out.status.code().map(i64::from));
    let text = run(&["report", out_dir.join("report.json").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("11 base + 0 combined - 0 dropped = 11 classes"));

    let empty = dir.path().join("empty");
    let out = run(&["campaign", "--model", &fixture("soda.devs"), "--out", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}
