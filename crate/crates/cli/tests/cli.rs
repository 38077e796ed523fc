use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_opinion-stream");

const SCRIPT: &str = r#"
vocab_size = 400
polar_fraction = 0.3
affinity = 4.0
zipf_exponent = 1.0
min_doc_len = 2
max_doc_len = 6
seed = 3

[[segments]]
length = 600
class_prior = [0.6, 0.4]
polarity_flip_fraction = 0.0
novelty_rate = 0.0

[[segments]]
length = 600
class_prior = [0.4, 0.6]
polarity_flip_fraction = 0.1
novelty_rate = 0.01
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("OPINION_STREAM_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A synthetic stream in a fresh directory.
fn workspace() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.toml");
    std::fs::write(&script, SCRIPT).unwrap();
    let stream = dir.path().join("stream.tsv");
    ok(&["synth", "--script", s(&script), "--output", s(&stream), "--seed-size", "50"]);
    (dir, stream)
}

fn write_config(dir: &Path, name: &str, stream: &Path, extra: &str) -> (PathBuf, PathBuf) {
    let out = dir.join(name);
    let config = dir.join(format!("{name}.toml"));
    std::fs::write(
        &config,
        format!("stream = {:?}\nseed_size = 50\noutput_dir = {:?}\n{extra}\n", s(stream), s(&out)),
    )
    .unwrap();
    (config, out)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn synth_writes_stream_and_manifest() {
    let (_dir, stream) = workspace();
    assert_eq!(std::fs::read_to_string(&stream).unwrap().lines().count(), 1200);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stream.with_file_name("stream.tsv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["length"], 1200);
    assert_eq!(manifest["seed_size"], 50);
    let segments = manifest["segments"].as_array().unwrap();
    assert_eq!(segments.len(), 2);
    assert_eq!(segments[1]["start"], 600);
}

#[test]
fn never_run_records_every_stream_document() {
    let (dir, stream) = workspace();
    let (config, out) = write_config(dir.path(), "never", &stream, "strategy = \"never\"");
    let stdout = String::from_utf8(ok(&["run", "--config", s(&config)]).stdout).unwrap();
    assert!(stdout.contains("1150 documents"), "{stdout}");

    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some("doc_id,predicted,truth,sampled,kappa,vocab_size"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1150);
    assert!(rows[0].starts_with("50,"));
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("0")));

    let summary = summary(&out);
    assert_eq!(summary["queries"], 0);
    assert_eq!(summary["spend_percent_rounded"], 4);
    assert!(out.join("model.json").is_file());
}

#[test]
fn identical_configs_give_identical_records() {
    let (dir, stream) = workspace();
    let strategy = "strategy = \"random\"\nbudget = 0.25\nrng_seed = 9";
    let (a, out_a) = write_config(dir.path(), "a", &stream, strategy);
    let (b, out_b) = write_config(dir.path(), "b", &stream, strategy);
    ok(&["run", "--config", s(&a)]);
    ok(&["run", "--config", s(&b)]);
    for file in ["records.csv", "model.json"] {
        assert_eq!(
            std::fs::read(out_a.join(file)).unwrap(),
            std::fs::read(out_b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn report_includes_alpha_sweep() {
    let (dir, stream) = workspace();
    let mut runs = Vec::new();
    for (name, log_alpha) in [("tight", -30), ("loose", -5)] {
        let (config, out) = write_config(
            dir.path(),
            name,
            &stream,
            &format!("strategy = \"uncertainty\"\nlog_alpha = {log_alpha}"),
        );
        ok(&["run", "--config", s(&config)]);
        runs.push(format!("{name}={}", s(&out)));
    }
    let report = dir.path().join("report");
    ok(&["report", "--runs", &runs[0], &runs[1], "--output", s(&report)]);
    let md = std::fs::read_to_string(report.join("report.md")).unwrap();
    assert!(md.contains("## Uncertainty threshold sweep"), "{md}");
    for file in ["spend_table.csv", "alpha_sweep.csv", "kappa_tight.csv", "kappa_loose.csv"] {
        assert!(report.join(file).is_file(), "{file}");
    }
    let sweep = std::fs::read_to_string(report.join("alpha_sweep.csv")).unwrap();
    let labels: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["tight", "loose"]);
}

#[test]
fn report_lists_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["report", "--runs", &format!("x={}", s(&dir.path().join("nope"))), "--output", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("records.csv") && err.contains("summary.json"), "{err}");
}

#[test]
fn prepare_variants_and_bad_variant() {
    let (dir, stream) = workspace();
    let reordered = dir.path().join("reordered.tsv");
    ok(&["prepare", "--input", s(&stream), "--variant", "reordered", "--seed-size", "50", "--output", s(&reordered)]);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("reordered.tsv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["variant"], "reordered");
    assert_eq!(manifest["novelty_fractions"].as_array().unwrap().len(), 1200);

    let fixed = dir.path().join("fixed.tsv");
    ok(&["prepare", "--input", s(&stream), "--variant", "fixed-vocab", "--seed-size", "50", "--output", s(&fixed)]);
    let kept = std::fs::read_to_string(&fixed).unwrap().lines().count();
    assert!(kept > 50 && kept < 1200, "{kept}");

    let out = cli(&["prepare", "--input", s(&stream), "--variant", "sideways", "--seed-size", "50", "--output", s(&fixed)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prepare_tokenizes_raw_text() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.tsv");
    std::fs::write(&input, "pos\tA fine, FINE film!\nneg\tDull... a bore\npos\tgreat\n").unwrap();
    let output = dir.path().join("tokens.tsv");
    ok(&[
        "prepare", "--input", s(&input), "--variant", "original", "--seed-size", "2", "--output", s(&output), "--raw",
        "--min-token-len", "2",
    ]);
    assert_eq!(std::fs::read_to_string(&output).unwrap(), "pos\tfine fine film\nneg\tdull bore\npos\tgreat\n");
}

#[test]
fn serve_without_answers_abandons_every_query() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.toml");
    std::fs::write(&script, SCRIPT.replace("length = 600", "length = 30")).unwrap();
    let stream = dir.path().join("stream.tsv");
    ok(&["synth", "--script", s(&script), "--output", s(&stream), "--seed-size", "50"]);
    let (config, out) = write_config(dir.path(), "human", &stream, "strategy = \"always\"\ntimeout_secs = 0.02");
    ok(&["serve", "--config", s(&config), "--port", "0"]);
    let summary = summary(&out);
    assert_eq!(summary["stream_length"], 10);
    assert_eq!(summary["queries"], 0);
    assert_eq!(summary["abandoned"], 10);
    assert_eq!(summary["interrupted"], false);
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().skip(1).filter(|r| r.split(',').nth(3) == Some("0")).count(), 10);
}

#[cfg(unix)]
#[test]
fn interrupted_serve_keeps_partial_records() {
    let (dir, stream) = workspace();
    let (config, out) = write_config(dir.path(), "human", &stream, "strategy = \"always\"\ntimeout_secs = 600");
    let child = Command::new(BIN)
        .args(["serve", "--config", s(&config), "--port", "0"])
        .env("OPINION_STREAM_LOG", "warn")
        .spawn()
        .unwrap();
    let records = out.join("records.csv");
    let start = Instant::now();
    while !records.is_file() {
        assert!(start.elapsed() < Duration::from_secs(20), "run never started");
        std::thread::sleep(Duration::from_millis(10));
    }
    std::thread::sleep(Duration::from_millis(100));
    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait_with_output().unwrap().status;
    assert!(status.success(), "{status:?}");
    let summary = summary(&out);
    assert_eq!(summary["interrupted"], true);
    assert_eq!(summary["stream_length"], 0);
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 1, "only the header: the first query was never answered");
}
