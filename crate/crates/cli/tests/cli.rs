use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqa")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = sqa(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fx = ok(&["fixture", "--out", p(d), "--train-docs", "100", "--test-docs", "20", "--seed", "3"]);
    assert_eq!(fx["train"]["documents"], 100);

    let train_sp = d.join("train.spoken.json");
    let test_sp = d.join("test.spoken.json");
    let s = ok(&["synthesize", "--dataset", p(&d.join("train.json")), "--tier", "wer-22.73", "--seed", "1", "--out", p(&train_sp)]);
    assert!((s["corpus_wer"].as_f64().unwrap() - 0.2273).abs() <= 0.01);
    ok(&["synthesize", "--dataset", p(&d.join("test.json")), "--sub-rate", "0.1", "--del-rate", "0.02", "--seed", "2", "--out", p(&test_sp)]);

    let f = ok(&["filter", "--dataset", p(&d.join("test.json")), "--spoken", p(&test_sp), "--out", p(&d.join("test.kept.json"))]);
    assert!(f["kept"].as_u64().unwrap() > 0);

    let ckpt = d.join("model.ckpt");
    let t = ok(&[
        "train", "--dataset", p(&d.join("train.json")), "--spoken", p(&train_sp), "--embeddings", "phoneme",
        "--epochs", "2", "--hidden", "8", "--seed", "5", "--out", p(&ckpt),
    ]);
    assert_eq!(t["losses"].as_array().unwrap().len(), 2);

    let e = ok(&[
        "evaluate", "--checkpoint", p(&ckpt), "--dataset", p(&d.join("test.kept.json")), "--spoken", p(&test_sp),
        "--out", p(&d.join("eval")),
    ]);
    let f1 = e["f1"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&f1));
    assert_eq!(e["questions"], f["kept"]);
    let csv = std::fs::read_to_string(d.join("eval/metrics.csv")).unwrap();
    assert!(csv.starts_with("id,em,f1,aos\n"));
    assert!(csv.lines().last().unwrap().starts_with("mean,"));
}

#[test]
fn errors_are_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqa(&["filter", "--dataset", "/nonexistent.json", "--spoken", "x", "--out", p(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, b"{\"format\": \"sqa-dataset/1\", \"split\": \"test\"}").unwrap();
    let out = sqa(&["synthesize", "--dataset", p(&bad), "--tier", "clean-ref", "--out", p(&dir.path().join("s"))]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "corpus");

    let out = sqa(&["synthesize", "--dataset", p(&bad), "--out", p(&dir.path().join("s"))]);
    assert!(!out.status.success());
}

#[test]
fn experiment_is_reproducible_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{
          "train_side": "text",
          "test_tiers": ["clean-ref", "wer-44.22"],
          "rows": [{"embeddings": ["word"]}, {"embeddings": ["word", "syllable"], "dropout": true}],
          "seeds": [1, 2],
          "fixture": {"train_documents": 30, "test_documents": 100, "person_facts": 4, "other_facts": 2, "seed": 7},
          "model": {"word_dim": 16, "hidden": 8, "min_count": 1},
          "training": {"learning_rate": 0.2, "epochs": 2, "batch_size": 16, "dropout_rate": 0.1, "clip_norm": 5.0}
        }"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = sqa(&["experiment", "--spec", p(&spec), "--out", p(out), "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["run_record.json", "report.md", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    ok(&["report", "--record", p(&a.join("run_record.json")), "--out", p(&c)]);
    assert_eq!(std::fs::read(a.join("report.md")).unwrap(), std::fs::read(c.join("report.md")).unwrap());
    let report = std::fs::read_to_string(a.join("report.md")).unwrap();
    assert!(report.contains("| (b) word+syllable+dropout |"));
    let timing: Value = serde_json::from_slice(&std::fs::read(a.join("timing.json")).unwrap()).unwrap();
    assert!(timing["wall_clock_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn synthesize_is_deterministic_and_clean_tier_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixture", "--out", p(d), "--train-docs", "2", "--test-docs", "80"]);
    let test = d.join("test.json");
    let (a, b) = (d.join("a.json"), d.join("b.json"));
    for out in [&a, &b] {
        ok(&["synthesize", "--dataset", p(&test), "--tier", "wer-54.82", "--seed", "9", "--out", p(out)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let clean = d.join("clean.json");
    let s = ok(&["synthesize", "--dataset", p(&test), "--tier", "wer-0", "--out", p(&clean)]);
    assert_eq!(s["corpus_wer"], 0.0);
    let spoken: Value = serde_json::from_slice(&std::fs::read(&clean).unwrap()).unwrap();
    for doc in spoken["documents"].as_array().unwrap() {
        let refs: Vec<&Value> = doc["ref_tokens"].as_array().unwrap().iter().map(|t| &t["text"]).collect();
        let hyps: Vec<&Value> = doc["hyp_words"].as_array().unwrap().iter().map(|w| &w["text"]).collect();
        assert_eq!(refs, hyps);
    }
    let t = ok(&["train", "--dataset", p(&d.join("train.json")), "--embeddings", "word,char", "--epochs", "1", "--hidden", "4", "--out", p(&d.join("m.ckpt"))]);
    assert_eq!(t["dropped"], 0);
}
