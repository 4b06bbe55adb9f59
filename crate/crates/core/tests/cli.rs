use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sumeval::genclient::stub::StubServer;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn sumeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumeval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn pipeline(out: &Path, extra: &[&str]) -> Output {
    let config = fixtures().join("pipeline.json");
    let mut args = vec!["--config", config.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    sumeval(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_usage_errors() {
    let help = sumeval(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in [
        "clean",
        "chunk",
        "validate",
        "lda-fit",
        "lda-topics",
        "evaluate",
        "generate",
        "report",
    ] {
        assert!(stdout(&help).contains(sub), "{sub}");
    }
    assert_eq!(sumeval(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sumeval(&["evaluate"]).status.code(), Some(2));
    assert_eq!(
        sumeval(&["--config", "/does/not/exist.json", "evaluate"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_errors_exit_2_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for extra in [
        vec!["--set", "corpus.path=nowhere.jsonl", "evaluate"],
        vec!["--set", "metrics=[\"ts\",\"bogus\"]", "evaluate"],
        vec!["--set", "unknown_key=1", "evaluate"],
        vec!["--set", "chunking.overlap=600", "chunk"],
        vec!["generate"],
    ] {
        let o = pipeline(&out, &extra);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
        assert!(!out.join("report.json").exists());
    }
}

#[test]
fn malformed_corpus_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": \"a\", \"text\": \"ok\"}\n{broken\n").unwrap();
    let set = format!("corpus.path={}", bad.display());
    let o = pipeline(&dir.path().join("o"), &["--set", &set, "evaluate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn clean_writes_kept_corpus_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("clean.json");
    let o = sumeval(&[
        "--config",
        config.to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "clean",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("kept=2 rejected=1"));
    let csv = std::fs::read_to_string(dir.path().join("clean/cleaning.csv")).unwrap();
    assert!(csv.starts_with("id,alnum_fraction,dict_fraction,kept\n"));
    assert!(csv.contains("noisy,") && csv.lines().any(|l| l.starts_with("noisy") && l.ends_with("false")));
}

#[test]
fn chunk_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path(), &["chunk"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("train=3 test=1"));
    assert!(dir.path().join("chunk/train_chunks.jsonl").exists());

    let o = pipeline(dir.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("model_tag=foundation run=1 invalid=1 total=4"));
    assert!(stdout(&o).contains("tp=1 fp=0 tn=7 fn=0"));
    let verdicts = std::fs::read_to_string(dir.path().join("verdicts.jsonl")).unwrap();
    assert!(verdicts.contains(r#""id":"defense-foundation-r1","is_valid":false,"rules":["R3"]"#));
}

#[test]
fn lda_fit_then_topics() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path(), &["lda-fit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = pipeline(dir.path(), &["lda-topics", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.split_whitespace().count() == 5));
}

#[test]
fn evaluate_is_deterministic_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = pipeline(&a, &["evaluate"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let second = pipeline(&b, &["evaluate"]);
    assert_eq!(first.stdout, second.stdout);
    for file in [
        "report.json",
        "report.csv",
        "report.md",
        "scores.jsonl",
        "verdicts.jsonl",
        "corpus_bleu.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let md = stdout(&first);
    assert!(md.contains("| Article - Random Summary |"));
    assert!(md.contains("Mean±Stddev of TS (w/o invalid)"));
    assert!(md.contains("Categorization II"));

    let csv = pipeline(&a, &["report", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    assert_eq!(csv.stdout, std::fs::read(a.join("report.csv")).unwrap());

    let other_seed = pipeline(&dir.path().join("c"), &["--seed", "99", "evaluate"]);
    assert_eq!(other_seed.status.code(), Some(0));
}

#[test]
fn no_filter_drops_valid_only_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path(), &["--no-filter", "--format", "json", "evaluate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["filter"] == "all"));
}

#[test]
fn oov_pairs_are_excluded_unless_requested() {
    let dir = tempfile::tempdir().unwrap();
    let summaries = dir.path().join("extra.jsonl");
    std::fs::write(
        &summaries,
        "{\"article_id\":\"farm\",\"summary_id\":\"farm-odd-r1\",\"run_id\":1,\"model_tag\":\"odd\",\"text\":\"---- 1234 the of and\"}\n",
    )
    .unwrap();
    let both = format!(
        "summaries=[\"{}\",\"{}\"]",
        fixtures().join("summaries.jsonl").display(),
        summaries.display()
    );
    let ts_n = |extra: &[&str]| -> u64 {
        let mut args = vec!["--set", both.as_str(), "--format", "json"];
        args.extend_from_slice(extra);
        args.push("evaluate");
        let o = pipeline(&dir.path().join("o"), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        report["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["model_tag"] == "odd" && r["metric"] == "ts" && r["filter"] == "all")
            .map(|r| r["stats"]["n"].as_u64().unwrap_or(0))
            .unwrap_or(0)
    };
    assert_eq!(ts_n(&[]), 0);
    assert_eq!(ts_n(&["--include-oov-pairs"]), 1);
}

#[test]
fn generate_against_stub() {
    let server = StubServer::extractive(6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let url = format!("generation.endpoint_url={}", server.url());
    let args = [
        "--set",
        url.as_str(),
        "--set",
        "generation.model_name=stub",
        "--set",
        "generation.rate_limit=0",
        "--set",
        "generate.runs=2",
        "generate",
    ];
    let o = pipeline(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("records=8 requested=8 failed=0"));
    let o = pipeline(dir.path(), &args);
    assert!(stdout(&o).contains("records=8 requested=0 failed=0"));
    assert_eq!(server.request_count(), 8);
}

#[test]
fn generate_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(
        dir.path(),
        &[
            "--set",
            "generation.endpoint_url=http://127.0.0.1:9/v1/completions",
            "--set",
            "generation.model_name=m",
            "--set",
            "generation.max_retries=0",
            "--set",
            "generation.rate_limit=0",
            "--set",
            "generate.runs=1",
            "generate",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
