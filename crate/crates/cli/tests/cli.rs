use std::path::PathBuf;
use std::process::{Command, Output};

const ASSETS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets");

fn langnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langnav")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

fn asset(rel: &str) -> String {
    format!("{ASSETS}/{rel}")
}

#[test]
fn corpus_train_classify_round_trip() {
    let corpus = tmp("cli_corpus.jsonl");
    let model = tmp("cli_model.json");
    let out = stdout(&langnav(&["corpus", "--seed", "3", "--count", "60", "--out", corpus.to_str().unwrap()]));
    assert!(out.contains("60 instructions"));
    let lines = std::fs::read_to_string(&corpus).unwrap();
    assert!(lines.lines().all(|l| l.contains("\"phrase\"") && l.contains("\"label\"")));
    let out = stdout(&langnav(&[
        "train", "--arch", "attbilstm", "--corpus", corpus.to_str().unwrap(), "--seed", "1", "--epochs", "2", "--out",
        model.to_str().unwrap(),
    ]));
    assert!(out.contains("final loss"));
    let out = stdout(&langnav(&["classify", "--model", model.to_str().unwrap(), "--text", "go to the lift"]));
    assert!(out.contains("attention go:"));
}

#[test]
fn classify_with_shipped_model_splits_phrases() {
    let out = stdout(&langnav(&[
        "classify", "--model", &asset("models/attbilstm.json"), "--text",
        "go to the restaurant and you know, keep away from people.",
    ]));
    assert!(out.contains("\"go to the restaurant\" -> goal"), "{out}");
    assert!(out.contains("\"keep away from people\" -> constraint"), "{out}");
}

#[test]
fn ground_prints_goal_and_constraints() {
    let out = stdout(&langnav(&[
        "ground", "--model", &asset("models/attbilstm.json"), "--lexicon", &asset("lexicon.txt"), "--map",
        &asset("maps/scene1.json"), "--text", "don't collide with people and walk to the information desk",
    ]));
    assert!(out.contains("-> information desk"), "{out}");
    assert!(out.contains("constraint \"people\" matches [person"), "{out}");
}

#[test]
fn simulate_records_a_trace_that_metrics_reads() {
    let trace = tmp("cli_run.trace");
    let out = stdout(&langnav(&[
        "simulate", "--map", &asset("maps/scene1.json"), "--model", &asset("models/attbilstm.json"), "--lexicon",
        &asset("lexicon.txt"), "--instruction", "go to the restaurant", "--seed", "2", "--record",
        trace.to_str().unwrap(),
    ]));
    assert!(out.contains("reached      true"), "{out}");
    let sim_len = out.lines().find(|l| l.starts_with("length")).unwrap().to_owned();
    let out = stdout(&langnav(&["metrics", "--trace", trace.to_str().unwrap()]));
    assert!(out.contains(&sim_len), "{out}");
}

#[test]
fn errors_exit_nonzero() {
    let o = langnav(&["metrics", "--trace", "/definitely/not/here"]);
    assert!(!o.status.success());
    let o = langnav(&["serve", "--assets", "/definitely/not/here"]);
    assert!(!o.status.success());
    let o = langnav(&[
        "simulate", "--map", &asset("maps/scene1.json"), "--model", &asset("models/attbilstm.json"), "--instruction",
        "you know",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no goal"));
}
