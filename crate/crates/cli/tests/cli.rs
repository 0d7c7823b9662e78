use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn groupprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupprob")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const Z2: &str = r#"{"kind":"free-abelian","dim":2}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lists_kinds() {
    let out = groupprob(&["--list-kinds"]);
    assert!(out.status.success());
    let kinds: Vec<String> =
        json_stdout(&out).as_array().unwrap().iter().map(|k| k["kind"].as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["free-abelian", "positive-naturals", "cyclic", "torus", "graph-space", "free-group"]);
}

#[test]
fn kk_from_file_and_inline() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(r#"{{"group":{Z2},"elements":[[1,0],[0,1]],"p":"1/1","q":"2/1"}}"#);
    let path = write(dir.path(), "s.json", &text);
    for arg in [path.as_str(), text.as_str()] {
        let out = groupprob(&["check-kk", "--scenario", arg, "--regime", "normed-sharp"]);
        assert_eq!(out.status.code(), Some(0));
        let r = json_stdout(&out);
        assert_eq!(r["satisfied"], true);
        assert_eq!(r["constant"]["formula"], "C_{1,q}=2^{1-1/q}");
    }
}

#[test]
fn bad_regime_is_an_error() {
    let s = format!(r#"{{"group":{Z2},"elements":[[1,0]],"p":"1/1","q":"2/1"}}"#);
    let out = groupprob(&["check-kk", "--scenario", &s, "--regime", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "invalid-regime");
}

#[test]
fn malformed_scenario_exits_one() {
    let out = groupprob(&["check-kk", "--scenario", "{not json"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "malformed-json");
}

#[test]
fn normedness_exit_codes() {
    let out = groupprob(&["normedness", "--group", r#"{"kind":"cyclic","modulus":5}"#, "--j", "2..4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json_stdout(&out)["counterexample"].is_object());

    let out = groupprob(&["normedness", "--group", Z2, "--j", "2,3,7", "--elements", "[[1,2],[-3,0],[0,0]]"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["elements_checked"], 3);
    assert_eq!(v["j_tested"], serde_json::json!([2, 3, 7]));
}

#[test]
fn envelope_trace_and_expectation() {
    let g = r#"{"kind":"free-abelian","dim":2,"weights":["1/2","3/1"]}"#;
    let out = groupprob(&["envelope", "trace", "--group", g, "--element", "[3,-1]"]);
    assert!(out.status.success());
    let stages = json_stdout(&out);
    let stages = stages.as_array().unwrap();
    assert_eq!(stages.first().unwrap()["stage"], "semigroup");
    assert_eq!(stages.last().unwrap()["stage"], "banach");
    // 3·(1/2) + 1·3
    assert!(stages.iter().all(|s| s["norm"] == "9/2"));

    let dist = r#"[{"element":[1,0],"p":"1/3"},{"element":[0,3],"p":"2/3"}]"#;
    let out = groupprob(&["expectation", "--group", Z2, "--dist", dist]);
    assert!(out.status.success());
    let v = json_stdout(&out);
    assert_eq!(v["coords"], serde_json::json!(["1/3", "2/1"]));
    assert_eq!(v["norm"], "7/3");
}

#[test]
fn expectation_without_linear_model_fails() {
    let out = groupprob(&[
        "expectation",
        "--group",
        r#"{"kind":"cyclic","modulus":5}"#,
        "--dist",
        r#"[{"element":[1],"p":"1/1"}]"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn levy_and_tail() {
    let s = r#"{"group":{"kind":"free-abelian","dim":1},"elements":[[1],[1],[1],[1]],"p":"1/1","q":"1/1"}"#;
    let out = groupprob(&["check-levy", "--scenario", s, "--s", "1", "--t", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_stdout(&out)["inequality"], "levy");
    let out = groupprob(&["check-levy", "--scenario", s, "--family", "[[1],[1,2],[3]]", "--s", "1", "--t", "1/2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = groupprob(&["check-tail", "--scenario", s, "--s", "1", "--t", "1", "--u", "1", "--v", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_stdout(&out)["inequality"], "tail-product");
}

#[test]
fn mont_on_simple_walk() {
    let law = r#"[{"element":[1],"p":"1/2"},{"element":[-1],"p":"1/2"}]"#;
    let out = groupprob(&[
        "check-mont",
        "--group",
        r#"{"kind":"free-abelian","dim":1}"#,
        "--law",
        law,
        "--n",
        "4",
        "--t-grid",
        "3,5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let reports = json_stdout(&out);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    // paths reaching distance > 3/10 within 4 steps, lhs at t = 3: ++++, +++-, ----, ---+
    assert_eq!(reports[0]["lhs"], "1/4");
    assert_eq!(reports[1]["lhs"], "0/1");
}

#[test]
fn word_norm_of_cubed_commutator() {
    let out = groupprob(&["word-norm", "--word", "[a,b]^3", "--conj-bound", "2", "--len-bound", "4"]);
    assert!(out.status.success());
    let v = json_stdout(&out);
    assert_eq!(v["upper"], 4);
    assert!(v["witness"].as_array().unwrap().len() == 4);
    for key in ["lower", "lower_certificate", "exact"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn audit_passes_on_exact_instance() {
    let out = groupprob(&["audit", "--group", r#"{"kind":"graph-space","edges":6}"#, "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out)["passed"], true);
}

#[test]
fn batch_then_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (i, xs) in ["[[1,0],[0,1]]", "[[2,1],[1,1],[0,3]]", "[[1,1]]"].iter().enumerate() {
        write(d, &format!("s{i}.json"), &format!(r#"{{"group":{Z2},"elements":{xs},"p":"1/1","q":"3/1"}}"#));
    }
    write(
        d,
        "manifest.json",
        r#"{"seed": 7, "output_dir": "out", "scenarios": [
            {"id": "a", "path": "s0.json", "check": "kk"},
            {"id": "b", "path": "s1.json", "check": "kk", "regime": "general"},
            {"id": "c", "path": "s2.json", "check": "kk"}
        ]}"#,
    );
    let out = groupprob(&["batch", "--manifest", &d.join("manifest.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ledger = d.join("out").join("ledger.jsonl");
    assert_eq!(fs::read_to_string(&ledger).unwrap().lines().count(), 3);

    let out = groupprob(&["summary", "--ledger", &ledger.to_string_lossy(), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("a,"));

    let out = groupprob(&["summary", "--ledger", &ledger.to_string_lossy(), "--format", "yaml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn batch_with_corrupt_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "bad.json", "{ nope");
    write(d, "manifest.json", r#"{"seed": 1, "scenarios": [{"path": "bad.json", "check": "kk"}]}"#);
    let out = groupprob(&["batch", "--manifest", &d.join("manifest.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    let line = fs::read_to_string(d.join("ledger.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["error"]["code"], "malformed-json");
}

#[test]
fn thread_count_from_environment() {
    let s = format!(r#"{{"group":{Z2},"elements":[[1,0],[0,1],[1,1]],"p":"2/1","q":"4/1"}}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_groupprob"))
        .args(["check-kk", "--scenario", &s])
        .env("GROUPPROB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_groupprob"))
        .args(["check-kk", "--scenario", &s])
        .env("GROUPPROB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
