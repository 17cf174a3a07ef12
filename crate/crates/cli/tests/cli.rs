//! End-to-end runs of the binary over the bundled fixture data.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gluecard"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/fixture_a")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should run")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.trim().lines().count(), 1, "expected one output line: {text}");
    serde_json::from_str(text.trim()).expect("stdout should be JSON")
}

/// Ingest the fixture and build a context-mode model with one part per
/// value combination; returns (data file, model file).
fn fixture_model(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("fixture.gldt");
    let model = dir.join("fixture.gltr");
    let schema = fixture_dir().join("schema.json");
    let out = run(&[
        "ingest",
        "--schema",
        schema.to_str().unwrap(),
        "--data",
        fixture_dir().to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(stdout_json(&out)["tables"], 2);
    let out = run(&[
        "build",
        "--catalog",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--partitions",
        "singleton",
    ]);
    assert_eq!(stdout_json(&out)["join_rows"], 6.0);
    (data, model)
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const Q1: &str = r#"{"tables":["T","S"],"predicates":[
    {"col":"T.a","op":"eq","val":10},{"col":"S.b","op":"eq","val":100}]}"#;

#[test]
fn pipeline_reproduces_the_fixture_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, model) = fixture_model(tmp.path());

    let q1 = tmp.path().join("q1.json");
    write(&q1, Q1);
    let out = run(&["estimate", "--model", model.to_str().unwrap(), "--query", q1.to_str().unwrap()]);
    let report = stdout_json(&out);
    assert_eq!(report["cardinality"], 2.0);
    assert!(report["probability"].as_f64().unwrap() > 0.0);

    let qb = tmp.path().join("qb.json");
    write(&qb, r#"{"tables":["T","S"],"predicates":[{"col":"S.b","op":"eq","val":100}]}"#);
    let out = run(&[
        "estimate",
        "--model",
        model.to_str().unwrap(),
        "--query",
        qb.to_str().unwrap(),
        "--distinct",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["cardinality"], 1.0);
    assert!(report.get("probability").is_none(), "distinct counts carry no probability");
}

#[test]
fn explain_narrates_on_stderr_only() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, model) = fixture_model(tmp.path());
    let q1 = tmp.path().join("q1.json");
    write(&q1, Q1);
    let out = run(&[
        "estimate",
        "--model",
        model.to_str().unwrap(),
        "--query",
        q1.to_str().unwrap(),
        "--explain",
    ]);
    stdout_json(&out);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("effective join [T, S]"), "stderr: {stderr}");
}

#[test]
fn identical_flags_build_byte_identical_models() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, first) = fixture_model(tmp.path());
    let second = tmp.path().join("again.gltr");
    run(&[
        "build",
        "--catalog",
        data.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--partitions",
        "singleton",
    ]);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn bench_scores_the_workload_against_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, model) = fixture_model(tmp.path());
    let wl = tmp.path().join("wl.jsonl");
    write(
        &wl,
        &format!(
            "{}\n{}\n",
            Q1.replace('\n', " "),
            r#"{"tables":["T","S"],"predicates":[{"col":"T.a","op":"eq","val":20}]}"#
        ),
    );
    let per_query = tmp.path().join("per_query.jsonl");
    let out = run(&[
        "bench",
        "--model",
        model.to_str().unwrap(),
        "--workload",
        wl.to_str().unwrap(),
        "--oracle",
        "--data",
        data.to_str().unwrap(),
        "--out",
        per_query.to_str().unwrap(),
    ]);
    let summary = stdout_json(&out);
    assert_eq!(summary["median"], 1.0);
    assert_eq!(summary["max"], 1.0);
    assert_eq!(summary["qerrors"].as_array().unwrap().len(), 2);

    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&per_query)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["truth"], 2.0);

    // Worker count must not change results.
    let sequential = bin()
        .env("GLUE_THREADS", "0")
        .args([
            "bench",
            "--model",
            model.to_str().unwrap(),
            "--workload",
            wl.to_str().unwrap(),
            "--oracle",
            "--data",
            data.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&sequential), summary);
}

#[test]
fn subplans_and_inspect_emit_parseable_json() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, model) = fixture_model(tmp.path());
    let q1 = tmp.path().join("q1.json");
    write(&q1, Q1);

    let out =
        run(&["subplans", "--model", model.to_str().unwrap(), "--query", q1.to_str().unwrap()]);
    let report = stdout_json(&out);
    assert_eq!(report["plans"].as_array().unwrap().len(), 3);

    let out = run(&["inspect", "--model", model.to_str().unwrap()]);
    assert!(out.status.success());
    let dump: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("inspect should dump JSON");
    assert!(dump["root"].is_object());
}

#[test]
fn unchanged_data_reports_no_stale_parts() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, model) = fixture_model(tmp.path());
    let out = run(&[
        "check-update",
        "--model",
        model.to_str().unwrap(),
        "--data",
        fixture_dir().to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["count"], 0);
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    // Unknown subcommand: usage error.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    // Help is not an error.
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    // --oracle without --data: flag dependency, still a usage error.
    let out = run(&["bench", "--model", "x", "--workload", "y", "--oracle"]);
    assert_eq!(out.status.code(), Some(1));

    // Missing model file: data error.
    let out = run(&["inspect", "--model", "/nonexistent.gltr"]);
    assert_eq!(out.status.code(), Some(2));

    // A data file is not a model file: data error with the magic named.
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture_model(tmp.path());
    let out = run(&["inspect", "--model", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
