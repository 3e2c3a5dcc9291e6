use std::fs;
use std::process::{Command, Output};

fn meshcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshcop")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn honest_full_run_exits_zero() {
    let o = meshcop(&["run", "--scenario", "full", "--mode", "honest"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("outcomes: completed=1 rejected=0 exhausted=0"), "{out}");
    assert!(out.contains("summary: 78 queries, 0 mismatches"));
}

#[test]
fn nonce_omission_is_a_mismatch() {
    let o = meshcop(&["run", "--scenario", "commissioner", "--mutations", "drop-noncea"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let mismatched: Vec<&str> = out
        .lines()
        .filter(|l| l.ends_with("MISMATCH"))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(mismatched, ["Q5a", "Q6a"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(meshcop(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(meshcop(&["run", "--mutations", "drop-everything"]).status.code(), Some(2));
    let o = meshcop(&["run", "--queries", "Q99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Q99"));
}

#[test]
fn list_queries_has_every_row_once() {
    let out = stdout(&meshcop(&["list-queries"]));
    let ids: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids.len(), 78);
    for id in ["Q1a", "Q1b", "Q2a", "Q2b", "Q2c", "Q3", "Q4a", "Q4b", "Q4c", "Q4d", "Q5a", "Q5b", "Q6a", "Q6b"] {
        assert_eq!(ids.iter().filter(|x| **x == id).count(), 1, "{id}");
    }
    assert_eq!(out.lines().filter(|l| l.contains("\tmodel-added\t")).count(), 1 + 14 + 9);
}

#[test]
fn structured_selection_yields_one_record() {
    let o = meshcop(&["run", "--scenario", "joiner", "--queries", "Q1b", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with(r#"{"id":"Q1b","kind":"correspondence","expected":"Holds","actual":"Holds","tool_semantics":"true""#), "{out}");
}

#[test]
fn dumped_counterexamples_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = meshcop(&["run", "--scenario", "joiner", "--mutations", "allow-zkp-forge", "--dump-traces", d]);
    assert_eq!(o.status.code(), Some(1));
    let file = dir.path().join("Q4d.trace");
    let r = meshcop(&["replay", file.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).contains("replay: identical"));

    let text = fs::read_to_string(&file).unwrap();
    let cut: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    fs::write(&file, cut).unwrap();
    assert_eq!(meshcop(&["replay", file.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn identical_flags_give_identical_output() {
    let args = ["run", "--scenario", "joiner", "--random", "--seeds", "3,4", "--walks", "16"];
    assert_eq!(meshcop(&args).stdout, meshcop(&args).stdout);
}
