//! End-to-end tests of the `concede` binary: subcommand chaining, exit
//! codes, artifact shapes, and rerun determinism.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use concede_core::corpus::{write_comments, write_instances, Label};
use common::{generate, SynthParams};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_concede")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binistry runs")
}

fn assert_exit(output: &Output, code: i32, context: &str) {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(
        output.status.code(),
        Some(code),
        "{context}\nstdout:\n{stdout}\nstderr:\n{stderr}"
    );
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }
}

/// Small synthetic workspace with corpus files, labeled instance files, and
/// a config wired for fast runs.
fn synth_workspace() -> Workspace {
    let params = SynthParams {
        n_threads: 100,
        replies_per_thread: 6,
        seed: 777,
        ..SynthParams::default()
    };
    let corpus = generate(&params);

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    for (split, comments) in &corpus.comments {
        let mut buf = Vec::new();
        write_comments(&mut buf, comments).unwrap();
        std::fs::write(data.join(format!("corpus_{split}.jsonl")), buf).unwrap();
    }
    for (split, records) in &corpus.records {
        let mut buf = Vec::new();
        write_instances(&mut buf, records).unwrap();
        std::fs::write(data.join(format!("instances_{split}.jsonl")), buf).unwrap();
    }

    let curated = concat!(env!("CARGO_MANIFEST_DIR"), "/data/curated_patterns.txt");
    let config = format!(
        r#"
seed = 11
out_dir = "out"

[corpus]
train = "data/corpus_train.jsonl"
dev = "data/corpus_dev.jsonl"
test = "data/corpus_test.jsonl"
unlabeled = "data/corpus_unlabeled.jsonl"

[instances]
train = "data/instances_train.jsonl"
dev = "data/instances_dev.jsonl"
test = "data/instances_test.jsonl"
unlabeled = "data/instances_unlabeled.jsonl"

[patterns]
curated = "{curated}"

[features]
include_jaccard = true
vocab_k = 400
chi2_k = 200

[svm]
c = 1.0
max_passes = 5

[selftrain]
grid = [[60, 8]]
"#
    );
    std::fs::write(dir.path().join("concede.toml"), config).unwrap();
    Workspace { dir }
}

#[test]
fn pipeline_happy_path_and_idempotence() {
    let ws = synth_workspace();

    let out = run_in(ws.path(), &["ingest"]);
    assert_exit(&out, 0, "ingest");
    let out = run_in(ws.path(), &["extract"]);
    assert_exit(&out, 0, "extract");
    assert!(ws.out("instances_train.jsonl").exists());

    // rerun without --force is a no-op
    let before = std::fs::read(ws.out("extract_manifest.json")).unwrap();
    let out = run_in(ws.path(), &["extract"]);
    assert_exit(&out, 0, "extract rerun");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("up to date"), "{stdout}");
    let after = std::fs::read(ws.out("extract_manifest.json")).unwrap();
    assert_eq!(before, after);

    // byte-identical extraction on a forced rerun (determinism)
    let first = std::fs::read(ws.out("instances_dev.jsonl")).unwrap();
    let out = run_in(ws.path(), &["extract", "--force"]);
    assert_exit(&out, 0, "extract --force");
    let second = std::fs::read(ws.out("instances_dev.jsonl")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn census_table_shape() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    assert_exit(&run_in(ws.path(), &["census"]), 0, "census");

    let tsv = std::fs::read_to_string(ws.out("census.tsv")).unwrap();
    assert!(tsv.starts_with("# config: "));
    let data_rows: Vec<&str> = tsv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("Marker"))
        .collect();
    assert_eq!(data_rows.len(), 19, "one row per candidate marker");
    assert!(data_rows.iter().any(|r| r.starts_with("but\t")));
    assert!(data_rows.iter().any(|r| r.starts_with("non the less\t")));
}

#[test]
fn invalid_config_exits_one_with_field_messages() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("concede.toml"), "[svm]\nc = -3.0\n").unwrap();
    let out = run_in(dir.path(), &["train"]);
    assert_exit(&out, 1, "invalid config");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("svm.c"), "{stderr}");
}

#[test]
fn missing_upstream_artifact_names_prior_subcommand() {
    let ws = synth_workspace();
    // extract before ingest
    let out = run_in(ws.path(), &["extract"]);
    assert_exit(&out, 2, "extract without ingest");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("concede ingest"), "{stderr}");

    // predict before train
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    let out = run_in(ws.path(), &["predict", "--split", "test"]);
    assert_exit(&out, 2, "predict without train");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("concede train"), "{stderr}");
}

#[test]
fn malformed_corpus_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(
        data.join("corpus_train.jsonl"),
        "{\"id\":\"a\",\"thread_id\":\"t\",\"author_id\":\"u\",\"text\":\"Fine.\",\"is_original_post\":false,\"delta_awarded\":false}\nnot json\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("concede.toml"),
        "[corpus]\ntrain = \"data/corpus_train.jsonl\"\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["ingest"]);
    assert_exit(&out, 2, "malformed corpus");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":2"), "error should name line 2: {stderr}");
}

#[test]
fn train_selftrain_predict_evaluate_chain() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    assert_exit(&run_in(ws.path(), &["train"]), 0, "train");
    assert!(ws.out("vocab.json").exists());
    assert!(ws.out("selection.json").exists());
    assert!(ws.out("model_nost.json").exists());

    assert_exit(&run_in(ws.path(), &["selftrain"]), 0, "selftrain");
    assert!(ws.out("grid.tsv").exists());
    assert!(ws.out("model_best.json").exists());

    assert_exit(
        &run_in(ws.path(), &["predict", "--split", "test"]),
        0,
        "predict",
    );
    assert!(ws.out("predictions_test.jsonl").exists());

    assert_exit(
        &run_in(ws.path(), &["evaluate", "--split", "test"]),
        0,
        "evaluate",
    );
    let eval_text = std::fs::read_to_string(ws.out("eval_test.txt")).unwrap();
    assert!(eval_text.contains("test F1"), "{eval_text}");
    assert!(eval_text.contains("pattern_lexicon"), "{eval_text}");

    assert_exit(
        &run_in(ws.path(), &["distribution", "--source", "gold"]),
        0,
        "distribution gold",
    );
    let dist = std::fs::read_to_string(ws.out("distribution_gold.txt")).unwrap();
    assert!(dist.contains("chi-square"), "{dist}");
    assert!(dist.contains("total"), "{dist}");

    assert_exit(
        &run_in(ws.path(), &["distribution", "--source", "predicted"]),
        0,
        "distribution predicted",
    );

    assert_exit(&run_in(ws.path(), &["agreement"]), 0, "agreement");
    let agreement = std::fs::read_to_string(ws.out("agreement.txt")).unwrap();
    assert!(agreement.contains("kappa"), "{agreement}");
}

#[test]
fn selftrain_reruns_are_bit_identical() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    assert_exit(&run_in(ws.path(), &["train"]), 0, "train");
    assert_exit(&run_in(ws.path(), &["selftrain"]), 0, "selftrain 1");
    let manifest1 = std::fs::read(ws.out("selftrain_manifest.json")).unwrap();
    let model1 = std::fs::read(ws.out("model_best.json")).unwrap();
    assert_exit(&run_in(ws.path(), &["selftrain", "--force"]), 0, "selftrain 2");
    let manifest2 = std::fs::read(ws.out("selftrain_manifest.json")).unwrap();
    let model2 = std::fs::read(ws.out("model_best.json")).unwrap();
    assert_eq!(manifest1, manifest2, "manifest digests must match");
    assert_eq!(model1, model2);
}

#[test]
fn evaluate_perfect_predictions_scores_one() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");

    // gold = predictions fixture
    let records = concede_core::corpus::read_instances(
        &ws.path().join("data/instances_test.jsonl"),
    )
    .unwrap();
    let mut buf = String::new();
    for rec in &records {
        let label = rec.gold_label.unwrap_or(Label::Other);
        buf.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "id": rec.instance.id,
                "label": label,
                "decision": if label == Label::ArgC { 1.0 } else { -1.0 },
                "pattern_hit": false,
            })
        ));
    }
    std::fs::create_dir_all(ws.path().join("out")).unwrap();
    std::fs::write(ws.out("predictions_test.jsonl"), buf).unwrap();

    assert_exit(
        &run_in(ws.path(), &["evaluate", "--split", "test"]),
        0,
        "evaluate fixture",
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.out("eval_test.json")).unwrap()).unwrap();
    let row = json["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["model"] == "self-training+patterns")
        .unwrap();
    assert_eq!(row["precision"].as_f64().unwrap(), 1.0);
    assert_eq!(row["recall"].as_f64().unwrap(), 1.0);
    assert_eq!(row["f1"].as_f64().unwrap(), 1.0);
}

#[test]
fn bootstrap_emits_pattern_report() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    assert_exit(&run_in(ws.path(), &["bootstrap"]), 0, "bootstrap");
    let raw = std::fs::read_to_string(ws.out("patterns_raw.txt")).unwrap();
    assert!(raw.contains("i agree"), "{raw}");
    let report = std::fs::read_to_string(ws.out("pattern_report.tsv")).unwrap();
    assert!(report.contains("rule_attitude"));
    assert!(report.contains("span_matches"));
}

/// Corpora without reply links (no original posts): the ablated mode drops
/// the Jaccard feature and predicts from text alone.
#[test]
fn ablated_mode_without_reply_links() {
    let ws = synth_workspace();
    assert_exit(&run_in(ws.path(), &["ingest"]), 0, "ingest");
    assert_exit(&run_in(ws.path(), &["train"]), 0, "train");

    // a second workspace config in ablated mode, reusing train artifacts
    let config = std::fs::read_to_string(ws.path().join("concede.toml")).unwrap();
    let ablated = config.replace("include_jaccard = true", "include_jaccard = false");
    std::fs::write(ws.path().join("ablated.toml"), ablated).unwrap();

    let out = run_in(
        ws.path(),
        &[
            "predict",
            "--split",
            "test",
            "--config",
            "ablated.toml",
            "--model",
            "nost",
        ],
    );
    // the train artifacts were produced under the jaccard config; the
    // ablated config simply never populates that column
    assert_exit(&out, 0, "ablated predict");
    assert!(ws.out("predictions_test_nost.jsonl").exists());
}
