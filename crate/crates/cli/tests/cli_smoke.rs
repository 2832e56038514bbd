//! End-to-end exercises of the installed binary: corpus generation, a full
//! run, report printing, and the exit-code contract (1 for rejected input,
//! 2 for a failed stage).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evibench"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const CONFIG: &str = r#"
cases_path = "cases.jsonl"
articles_path = "articles.jsonl"
output_root = "out"

[evaluation]
replicates = 25
"#;

#[test]
fn synth_run_all_and_reports_work_end_to_end() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();

    let synth = run_in(
        dir.path(),
        &[
            "synth",
            "--cases",
            "60",
            "--out-cases",
            "cases.jsonl",
            "--out-articles",
            "articles.jsonl",
        ],
    );
    assert_success(&synth, "synth");
    assert!(dir.path().join("cases.jsonl").is_file());
    assert!(dir.path().join("articles.jsonl").is_file());

    let run = run_in(dir.path(), &["run-all", "--config", "run.toml"]);
    assert_success(&run, "run-all");
    for artifact in [
        "out/rows.jsonl",
        "out/diagnostics.json",
        "out/reports/thresholds.json",
        "out/reports/comparison.json",
        "out/manifest.json",
        "out/config_digest.txt",
    ] {
        assert!(dir.path().join(artifact).is_file(), "missing {artifact}");
    }

    // Diagnostics prints a JSON object with row counts.
    let diag = run_in(dir.path(), &["diagnostics", "-c", "run.toml"]);
    assert_success(&diag, "diagnostics");
    let parsed: serde_json::Value =
        serde_json::from_slice(&diag.stdout).expect("diagnostics prints JSON");
    assert!(parsed["total_rows"].as_u64().unwrap() > 0);

    // Compare prints the against-baseline report.
    let cmp = run_in(dir.path(), &["compare", "-c", "run.toml"]);
    assert_success(&cmp, "compare");
    let parsed: serde_json::Value =
        serde_json::from_slice(&cmp.stdout).expect("compare prints JSON");
    assert!(!parsed["comparisons"].as_array().unwrap().is_empty());
}

#[test]
fn stage_subcommands_stop_at_their_cut() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let synth = run_in(
        dir.path(),
        &[
            "synth",
            "--cases",
            "40",
            "--out-cases",
            "cases.jsonl",
            "--out-articles",
            "articles.jsonl",
        ],
    );
    assert_success(&synth, "synth");

    let ingest = run_in(dir.path(), &["ingest-cases", "-c", "run.toml"]);
    assert_success(&ingest, "ingest-cases");
    assert!(dir.path().join("out/cases.jsonl").is_file());
    assert!(!dir.path().join("out/rows.jsonl").exists(), "row construction ran early");

    let supervise = run_in(dir.path(), &["build-supervision", "-c", "run.toml"]);
    assert_success(&supervise, "build-supervision");
    assert!(dir.path().join("out/rows.jsonl").is_file());
    assert!(!dir.path().join("out/reports").exists(), "evaluation ran early");

    let evaluate = run_in(dir.path(), &["evaluate", "-c", "run.toml"]);
    assert_success(&evaluate, "evaluate");
    assert!(dir.path().join("out/reports/comparison.json").is_file());
}

#[test]
fn rejected_input_exits_1() {
    let dir = TempDir::new().unwrap();
    // Structurally valid TOML pointing at case data that does not exist.
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let out = run_in(dir.path(), &["run-all", "-c", "run.toml"]);
    assert_eq!(out.status.code(), Some(1), "missing input data is a rejection");
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // A config that fails validation outright.
    fs::write(dir.path().join("bad.toml"), format!("{CONFIG}\ntoken_budget = 0\n")).unwrap();
    let out = run_in(dir.path(), &["run-all", "-c", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1), "zero token budget is a rejection");
}

#[test]
fn unreadable_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["run-all", "-c", "no-such-config.toml"]);
    assert_eq!(out.status.code(), Some(2), "io failure is a stage error");
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}
