//! End-to-end runs of the `btdetect` binary.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use btdetect::dataset::{build_translation_dataset, synthetic, LabeledExample};
use btdetect::translator::Translator;
use btdetect::LanguageTag;
use serde_json::Value;

fn btdetect(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_btdetect"));
    cmd.args(args);
    for (k, _) in std::env::vars_os() {
        if k.to_string_lossy().starts_with("BTDETECT_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    btdetect(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Human and machine English sentences from the synthetic corpus.
fn labeled_examples(n: usize) -> Vec<LabeledExample> {
    let fixture = synthetic::fixture_backend(0);
    let pairs = synthetic::parallel_pairs(2, n, &fixture);
    let translator = Translator::new(fixture);
    build_translation_dataset(&pairs, &translator, &LanguageTag::new("fr").unwrap(), 4)
        .unwrap()
        .examples
}

fn write_labeled(dir: &Path, examples: &[LabeledExample]) -> PathBuf {
    let path = dir.join("labeled.tsv");
    let body: String = examples
        .iter()
        .map(|e| format!("{}\t{}\n", e.text.text, e.label))
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

fn backtranslate_labeled(dir: &Path, examples: &[LabeledExample]) -> PathBuf {
    let input = write_labeled(dir, examples);
    let records = dir.join("records.jsonl");
    let out = run(&[
        "backtranslate",
        "--labeled",
        "--input",
        p(&input),
        "--intermediate-lang",
        "fr",
        "--out",
        p(&records),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    records
}

#[test]
fn empty_input_succeeds_with_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    std::fs::write(&input, "").unwrap();
    let records = dir.path().join("records.jsonl");
    let out = run(&["backtranslate", "--input", p(&input), "--intermediate-lang", "de", "--out", p(&records)]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&records).unwrap(), "");
}

#[test]
fn backtranslate_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "the film was good\nI did not like the ending at all\n").unwrap();
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("out{i}.jsonl"));
            let out = run(&["backtranslate", "--input", p(&input), "--intermediate-lang", "fr", "--out", p(&path)]);
            assert_eq!(code(&out), 0);
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let first: Value = serde_json::from_slice(outputs[0].split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(first["id"], "1");
    assert_eq!(first["pivot"]["language"], "fr");
    assert!(first.get("created_at").is_none());
}

#[test]
fn unreachable_endpoint_fails_every_item() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "one line\nanother line\n").unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("http://127.0.0.1:{port}/translate");
    let records = dir.path().join("records.jsonl");
    let out = run(&[
        "backtranslate",
        "--input",
        p(&input),
        "--intermediate-lang",
        "fr",
        "--backend",
        "http",
        "--endpoint",
        &endpoint,
        "--retries",
        "0",
        "--out",
        p(&records),
    ]);
    assert_eq!(code(&out), 3);
    assert!(!records.exists());
}

#[test]
fn corrupted_record_line_is_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let records = backtranslate_labeled(dir.path(), &labeled_examples(15));
    let text = std::fs::read_to_string(&records).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 30);
    lines[16] = "{\"id\": \"17\", \"original\":";
    std::fs::write(&records, lines.join("\n") + "\n").unwrap();

    let features = dir.path().join("features.jsonl");
    let out = run(&["featurize", "--records", p(&records), "--out", p(&features)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 17"));
    assert_eq!(std::fs::read_to_string(&features).unwrap().lines().count(), 29);
}

#[test]
fn featurize_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let records = backtranslate_labeled(dir.path(), &labeled_examples(10));
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b, &a] {
        assert_eq!(code(&run(&["featurize", "--records", p(&records), "--out", p(path)])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn train_then_detect() {
    let dir = tempfile::tempdir().unwrap();
    let examples = labeled_examples(100);
    let records = backtranslate_labeled(dir.path(), &examples);
    let features = dir.path().join("features.jsonl");
    assert_eq!(code(&run(&["featurize", "--records", p(&records), "--out", p(&features)])), 0);

    let model = dir.path().join("model.json");
    let out = run(&[
        "train",
        "--dataset",
        p(&features),
        "--classifier",
        "svm_smo",
        "--model-out",
        p(&model),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let input = dir.path().join("unlabeled.txt");
    let body: String = examples.iter().map(|e| format!("{}\n", e.text.text)).collect();
    std::fs::write(&input, body).unwrap();
    let out = run(&["detect", "--model", p(&model), "--input", p(&input), "--intermediate-lang", "fr"]);
    assert_eq!(code(&out), 0);
    let detections: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(detections.len(), examples.len());
    let correct = detections
        .iter()
        .zip(&examples)
        .filter(|(d, e)| d["label"] == e.label.to_string())
        .count();
    assert!(correct as f64 >= 0.95 * examples.len() as f64, "{correct}/{}", examples.len());
    assert_eq!(detections[4]["line"], 5);
}

#[test]
fn detect_refuses_a_model_with_another_schema() {
    let dir = tempfile::tempdir().unwrap();
    let records = backtranslate_labeled(dir.path(), &labeled_examples(10));
    let features = dir.path().join("features.jsonl");
    run(&["featurize", "--records", p(&records), "--out", p(&features)]);
    let model = dir.path().join("model.json");
    run(&["train", "--dataset", p(&features), "--classifier", "linear", "--model-out", p(&model)]);
    let text = std::fs::read_to_string(&model).unwrap().replace("bleu7-v1", "bleu7-v0");
    std::fs::write(&model, text).unwrap();

    let input = dir.path().join("in.txt");
    std::fs::write(&input, "a sentence\n").unwrap();
    let out_file = dir.path().join("detections.jsonl");
    let out = run(&[
        "detect",
        "--model",
        p(&model),
        "--input",
        p(&input),
        "--intermediate-lang",
        "fr",
        "--out",
        p(&out_file),
    ]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(!out_file.exists());
}

#[test]
fn shipped_config_runs_offline() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/fixture_experiment.conf");
    let out = run(&["experiment", "--config", p(&config), "--out-dir", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stem = "translation_en-fr_det-fr_seed7";
    for ext in ["txt", "csv", "json", "train.jsonl", "test.jsonl"] {
        assert!(dir.path().join(format!("{stem}.{ext}")).exists(), "{ext}");
    }
    let csv = std::fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(std::fs::read_to_string(dir.path().join(format!("{stem}.test.jsonl"))).unwrap().lines().count(), 300);
}

#[test]
fn environment_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = btdetect(&[
        "experiment",
        "--seed",
        "1",
        "--set",
        "corpus_size=40",
        "--set",
        "classifiers=linear",
        "--out-dir",
        p(dir.path()),
    ])
    .env("BTDETECT_SEED", "4")
    .env("BTDETECT_NOT_A_SETTING", "x")
    .output()
    .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("translation_en-fr_det-fr_seed4.json").exists());
}

#[test]
fn unknown_setting_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["experiment", "--set", "corpus_sise=40", "--out-dir", p(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus_sise"));
}
