//! Binary-level pipeline tests: determinism, artifact stamping, error JSON,
//! and the published constant-baseline fixture through `eval`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use notecast::forge::{PredictionExample, QuestionCategory};
use notecast::pipeline::{PredictionRow, RunConfig, StageMeta, StageRef};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_notecast"))
}

fn write_config(dir: &Path, out_dir: &Path, value: serde_json::Value) -> PathBuf {
    let mut value = value;
    value["out_dir"] = serde_json::json!(out_dir);
    let path = dir.join("notecast.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn base_config() -> serde_json::Value {
    serde_json::json!({
        "workers": 1,
        "synth": {"seed": 7, "n_admissions": 40},
        "forge": {"seed": 7, "test_fraction": 0.2},
        "train": {"seed": 7, "steps": 60, "eval_every": 20},
        "predict": {"seed": 7, "forecaster": {"kind": "policy"}},
        "eval": {"seed": 7}
    })
}

fn run(config: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_error(output: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr not error JSON: {stderr}"))
}

#[test]
fn full_pipeline_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("run_a");
    let out_b = tmp.path().join("run_b");
    let config_a = write_config(tmp.path(), &out_a, base_config());
    let output = run(&config_a, &["all"]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let config_b = write_config(tmp.path(), &out_b, base_config());
    let output = run(&config_b, &["all"]);
    assert!(output.status.success());

    let metrics_a = std::fs::read(out_a.join("metrics.json")).unwrap();
    let metrics_b = std::fs::read(out_b.join("metrics.json")).unwrap();
    assert_eq!(metrics_a, metrics_b);
}

#[test]
fn eval_before_predict_names_the_producing_command() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &out, base_config());

    let output = run(&config, &["eval"]);
    assert!(!output.status.success());
    let error = stderr_error(&output);
    assert_eq!(error["error"]["code"], "missing_artifact");
    assert!(
        error["error"]["message"]
            .as_str()
            .unwrap()
            .contains("notecast predict"),
        "{error}"
    );
}

#[test]
fn stale_upstream_artifact_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &out, base_config());

    let output = run(&config, &["synth"]);
    assert!(output.status.success());

    // Changing the seed invalidates the stamped synth artifact.
    let output = run(&config, &["--seed-override", "99", "forge"]);
    assert!(!output.status.success());
    let error = stderr_error(&output);
    assert_eq!(error["error"]["code"], "stale_artifact");
    assert!(
        error["error"]["message"]
            .as_str()
            .unwrap()
            .contains("notecast synth"),
        "{error}"
    );
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut config = base_config();
    config["train"] = serde_json::json!({"steps": 10});
    let config = write_config(tmp.path(), &out, config);

    let output = run(&config, &["synth"]);
    assert!(!output.status.success());
    let error = stderr_error(&output);
    assert_eq!(error["error"]["code"], "config");
    assert!(error["error"]["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn eval_reproduces_the_published_constant_row() {
    // Hand-built fixture: 1000 labels with 274 positives, constant p=0.248.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    std::fs::create_dir_all(&out).unwrap();

    let mut config_value = base_config();
    config_value["predict"]["forecaster"] = serde_json::json!({"kind": "constant", "rate": 0.248});
    let config_path = write_config(tmp.path(), &out, config_value);
    let config = RunConfig::from_file(&config_path).unwrap();

    let examples: Vec<PredictionExample> = (0..1000)
        .map(|i| PredictionExample {
            example_id: format!("e{i:04}"),
            admission_id: format!("a{i:04}"),
            patient_id: format!("p{i:04}"),
            split_time: chrono::TimeZone::with_ymd_and_hms(&chrono::Utc, 2026, 1, 1, 12, 0, 0)
                .unwrap(),
            question: "Will the event occur?".into(),
            category: QuestionCategory::Other,
            label: u8::from(i < 274),
            context_text: "fixture".into(),
        })
        .collect();
    let rows: Vec<PredictionRow> = examples
        .iter()
        .map(|e| PredictionRow {
            example_id: e.example_id.clone(),
            model_name: "constant-0.2480".into(),
            probability: 0.248,
            trace: String::new(),
            latency_ms: 0,
        })
        .collect();

    let write_jsonl = |path: &Path, lines: Vec<String>| {
        std::fs::write(path, lines.join("\n") + "\n").unwrap();
    };
    write_jsonl(
        &out.join("test_examples.jsonl"),
        examples
            .iter()
            .map(|e| serde_json::to_string(e).unwrap())
            .collect(),
    );
    write_jsonl(
        &out.join("predictions.jsonl"),
        rows.iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect(),
    );

    // Stamp the predictions as this config's predict stage output.
    StageMeta {
        stage: "predict".into(),
        config_hash: config.predict_hash(),
        seed: config.predict.seed,
        upstream: vec![StageRef {
            stage: "forge".into(),
            config_hash: config.forge_hash(),
        }],
        outputs: vec!["predictions.jsonl".into()],
    }
    .write(&out)
    .unwrap();

    let output = run(&config_path, &["eval"]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let reward = metrics["report"]["mean_reward"].as_f64().unwrap();
    let brier = metrics["report"]["brier"].as_f64().unwrap();
    assert!((reward - (-0.5890)).abs() < 1e-3, "reward {reward}");
    assert!((brier - 0.1996).abs() < 1e-3, "brier {brier}");
    assert!(
        metrics["report"]["auroc"].is_null(),
        "constant row leaves AUROC blank"
    );

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("auroc=-"), "{stdout}");
}

#[test]
fn judge_runs_with_a_mock_and_identical_traces_tie() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut config = base_config();
    config["judge"] = serde_json::json!({
        "seed": 7,
        "predictions_a": out.join("predictions.jsonl"),
        "predictions_b": out.join("predictions.jsonl"),
        "kind": "longer_trace"
    });
    let config = write_config(tmp.path(), &out, config);

    let output = run(&config, &["all"]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let output = run(&config, &["judge"]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let win_rates: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("win_rates.json")).unwrap())
            .unwrap();
    // A system judged against itself can only tie.
    assert_eq!(win_rates["table"]["overall"].as_f64().unwrap(), 0.5);
    assert!(out.join("verdicts.jsonl").exists());
}

#[test]
fn workers_flag_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let out_serial = tmp.path().join("serial");
    let out_parallel = tmp.path().join("parallel");

    let config = write_config(tmp.path(), &out_serial, base_config());
    assert!(run(&config, &["all"]).status.success());

    let config = write_config(tmp.path(), &out_parallel, base_config());
    assert!(run(&config, &["--workers", "4", "all"]).status.success());

    let metrics_serial = std::fs::read(out_serial.join("metrics.json")).unwrap();
    let metrics_parallel = std::fs::read(out_parallel.join("metrics.json")).unwrap();
    assert_eq!(metrics_serial, metrics_parallel);
}
