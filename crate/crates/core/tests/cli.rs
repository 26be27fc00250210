use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn papageno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_papageno")).args(args).output().expect("spawn papageno")
}

fn ok(args: &[&str]) -> String {
    let out = papageno(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn fixture_eval_prints_majority_table() {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/task2_test_distribution.json");
    let text = ok(&["eval", "--fixture", fixture]);
    assert!(text.contains("0.37  0.50  0.43  0.75"), "{text}");
    let json: Value = serde_json::from_str(&ok(&["--json", "eval", "--fixture", fixture])).unwrap();
    assert_eq!(json["meta"]["model"], "majority");
    assert_eq!(json["per_class"].as_array().unwrap().len(), 2);
}

#[test]
fn errors_exit_nonzero_with_json_envelope() {
    let out = papageno(&["--json", "eval", "--model", "/nonexistent/m.json", "--data", "/nonexistent/d.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "io");

    let out = papageno(&["train", "--train", "x", "--model", "y", "--task", "7"]);
    assert_eq!(out.status.code(), Some(2));
    let out = papageno(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_with_signal_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out-dir", &p(d, "raw"), "--docs", "600", "--days", "30"]);
    let stats: Value = serde_json::from_str(&ok(&[
        "--json", "ingest", "--input", &p(d, "raw/tweets.jsonl"), "--output", &p(d, "in.jsonl"),
    ]))
    .unwrap();
    assert!(stats["stats"]["excluded"].as_u64().unwrap() >= 1);
    assert_eq!(stats["stats"]["retweets_removed"], 1);

    ok(&["split", "--input", &p(d, "raw/labeled.jsonl"), "--out-dir", &p(d, "split")]);
    ok(&["train", "--train", &p(d, "split/train.jsonl"), "--task", "2", "--model", &p(d, "m.json")]);
    ok(&["eval", "--model", &p(d, "m.json"), "--data", &p(d, "split/test.jsonl"), "--out", &p(d, "metrics.json")]);
    ok(&["predict", "--model", &p(d, "m.json"), "--input", &p(d, "in.jsonl"), "--output", &p(d, "preds.csv")]);
    let preds = std::fs::read_to_string(d.join("preds.csv")).unwrap();
    assert!(preds.starts_with("id,label\n"));

    ok(&[
        "volumes", "--predictions", &p(d, "preds.csv"), "--tweets", &p(d, "in.jsonl"), "--level", "2",
        "--out", &p(d, "daily.csv"), "--chart", &p(d, "daily.svg"),
    ]);
    let daily = std::fs::read_to_string(d.join("daily.csv")).unwrap();
    assert!(daily.starts_with("date,total,about_suicide,off_topic"));
    assert!(std::fs::read_to_string(d.join("daily.svg")).unwrap().contains("<svg"));

    let peaks: Value = serde_json::from_str(&ok(&[
        "--json", "peaks", "--predictions", &p(d, "preds.csv"), "--tweets", &p(d, "in.jsonl"), "--level", "2",
        "--k", "3", "--min-separation", "5",
    ]))
    .unwrap();
    let peaks = peaks["peaks"].as_array().unwrap();
    assert!(!peaks.is_empty() && peaks.len() <= 3);

    let kappa: Value = serde_json::from_str(&ok(&[
        "--json", "kappa", "--a", &p(d, "preds.csv"), "--b", &p(d, "raw/labels.csv"), "--level", "2",
    ]))
    .unwrap();
    assert!(kappa["kappa"]["kappa"].as_f64().unwrap() > 0.5);

    let bench: Value = serde_json::from_str(&ok(&[
        "--json", "benchmark", "--split-dir", &p(d, "split"), "--task", "2", "--majority", "--model",
        &format!("svm={}", p(d, "m.json")),
    ]))
    .unwrap();
    assert_eq!(bench.as_array().unwrap().len(), 4);
}
