//! Stage implementations. Each stage validates its upstream stamps, does its
//! work, writes its artifacts plus a provenance sidecar, and returns a
//! summary report. Every stage is idempotent for a fixed config.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, filter_eligible, generate_synthetic_cohort, ingest_corpus, Trajectory};
use crate::forecaster::{
    featurize, mean_forecast, ConstantForecaster, EndpointForecaster, ForecastError, Forecaster,
    LogisticPolicy, PolicyCheckpoint, PolicyForecaster, PromptTemplate,
};
use crate::forge::{
    dataset_stats, generate_examples, partition_dataset, rule_annotator, sample_split, Annotator,
    DatasetStats, EndpointAnnotator, ExampleGenOptions, ForgeError, PredictionExample,
    SplitOptions,
};
use crate::judge::{
    aggregate, mock, run_pairwise, EndpointJudge, JudgeClient, PairwiseOptions, TracePair,
    WinRateTable,
};
use crate::parallel::parallel_map;
use crate::pipeline::artifacts::{
    io_err, read_json, read_jsonl, require_file, write_json_pretty, write_jsonl, PredictionRow,
    StageMeta, StageRef,
};
use crate::rng::derive_rng;
use crate::scoring::{evaluate, log_score, MetricsReport, OutcomeLabel, Prediction, DEFAULT_EPS};
use crate::trainer::{train, TrainConfig, TrainExample};

use super::{AnnotatorKind, DatasetSelector, ForecasterKind, JudgeKind, PipelineError, RunConfig};

fn ensure_out_dir(config: &RunConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))
}

// ─── synth ───────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthReport {
    pub config_hash: String,
    pub seed: u64,
    pub n_trajectories: usize,
    pub n_notes: usize,
    pub n_patients: usize,
}

pub fn run_synth(config: &RunConfig) -> Result<SynthReport, PipelineError> {
    ensure_out_dir(config)?;
    let cohort = generate_synthetic_cohort(
        config.synth.seed,
        config.synth.n_admissions,
        &config.synth.generator,
    )?;

    let notes_path = config.out_dir.join("notes.jsonl");
    let file = std::fs::File::create(&notes_path).map_err(|e| io_err(&notes_path, e))?;
    corpus::export_corpus(&cohort.trajectories, std::io::BufWriter::new(file))?;

    let truth_path = config.out_dir.join("ground_truth.jsonl");
    let file = std::fs::File::create(&truth_path).map_err(|e| io_err(&truth_path, e))?;
    corpus::synth::write_ground_truth(&cohort.tracks, std::io::BufWriter::new(file))?;

    let meta = StageMeta {
        stage: "synth".into(),
        config_hash: config.synth_hash(),
        seed: config.synth.seed,
        upstream: vec![],
        outputs: vec!["notes.jsonl".into(), "ground_truth.jsonl".into()],
    };
    meta.write(&config.out_dir)?;

    let mut patients: Vec<&str> = cohort
        .trajectories
        .iter()
        .map(|t| t.patient_id.as_str())
        .collect();
    patients.sort_unstable();
    patients.dedup();

    Ok(SynthReport {
        config_hash: meta.config_hash,
        seed: config.synth.seed,
        n_trajectories: cohort.trajectories.len(),
        n_notes: cohort.trajectories.iter().map(|t| t.n_notes()).sum(),
        n_patients: patients.len(),
    })
}

// ─── forge ───────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgeReport {
    pub config_hash: String,
    pub seed: u64,
    pub stats: DatasetStats,
    pub train_stats: DatasetStats,
    pub test_stats: DatasetStats,
    pub unresolvable_dropped: usize,
    pub skipped_splits: Vec<String>,
    pub ingest_warnings: Vec<String>,
}

struct TrajectoryYield {
    examples: Vec<PredictionExample>,
    dropped: usize,
    skips: Vec<String>,
}

fn forge_one_trajectory(
    trajectory: &Trajectory,
    annotator: &dyn Annotator,
    config: &RunConfig,
) -> TrajectoryYield {
    let gen_opts = ExampleGenOptions {
        questions_per_split: config.forge.questions_per_split,
        budget: config.forge.budget,
        include_discharge_in_resolution: config.forge.include_discharge_in_resolution,
    };
    let mut examples = Vec::new();
    let mut dropped = 0usize;
    let mut skips = Vec::new();
    let mut seen_split_times = Vec::new();

    for split_index in 0..config.forge.splits_per_trajectory {
        let split_opts = SplitOptions {
            min_context_notes: config.forge.min_context_notes,
            min_future_notes: config.forge.min_future_notes,
            split_index,
        };
        let split = match sample_split(trajectory, config.forge.seed, &split_opts) {
            Ok(split) => split,
            Err(e) => {
                skips.push(e.to_string());
                continue;
            }
        };
        // Multi-split mode may land on the same gap twice; keep one.
        if seen_split_times.contains(&split.split_time) {
            continue;
        }
        seen_split_times.push(split.split_time);

        match generate_examples(trajectory, &split, annotator, &gen_opts) {
            Ok(batch) => {
                dropped += batch.unresolvable_dropped;
                examples.extend(batch.examples);
            }
            Err(e) => skips.push(format!(
                "{} split {}: skipped after retries: {e}",
                trajectory.admission_id, split_index
            )),
        }
    }

    TrajectoryYield {
        examples,
        dropped,
        skips,
    }
}

pub fn run_forge(config: &RunConfig) -> Result<ForgeReport, PipelineError> {
    ensure_out_dir(config)?;
    StageMeta::check(
        &config.out_dir,
        "synth",
        &config.synth_hash(),
        "notecast synth",
    )?;
    let notes_path = config.out_dir.join("notes.jsonl");
    require_file(&notes_path, "notecast synth")?;

    let ingest = ingest_corpus(&notes_path)?;
    let trajectories = filter_eligible(ingest.trajectories, config.forge.min_notes);
    if trajectories.is_empty() {
        return Err(PipelineError::Config(format!(
            "no eligible trajectories (min_notes = {})",
            config.forge.min_notes
        )));
    }

    let yields: Vec<TrajectoryYield> = match config.forge.annotator.kind {
        AnnotatorKind::Rule => {
            let truth_path = config.out_dir.join("ground_truth.jsonl");
            require_file(&truth_path, "notecast synth")?;
            let file = std::fs::File::open(&truth_path).map_err(|e| io_err(&truth_path, e))?;
            let tracks = corpus::synth::read_ground_truth(file)?;
            parallel_map(&trajectories, config.workers, |_, trajectory| match tracks
                .get(&trajectory.admission_id)
            {
                Some(admission_tracks) => match rule_annotator(admission_tracks) {
                    Ok(annotator) => forge_one_trajectory(trajectory, &annotator, config),
                    Err(e) => TrajectoryYield {
                        examples: vec![],
                        dropped: 0,
                        skips: vec![format!("{}: {e}", trajectory.admission_id)],
                    },
                },
                None => TrajectoryYield {
                    examples: vec![],
                    dropped: 0,
                    skips: vec![format!(
                        "{}: no ground-truth tracks for rule annotator",
                        trajectory.admission_id
                    )],
                },
            })
        }
        AnnotatorKind::Endpoint => {
            let endpoint = config.forge.annotator.endpoint.as_ref().ok_or_else(|| {
                PipelineError::Config("endpoint annotator requires an endpoint".into())
            })?;
            let annotator = EndpointAnnotator::new(endpoint);
            parallel_map(&trajectories, config.workers, |_, trajectory| {
                forge_one_trajectory(trajectory, &annotator, config)
            })
        }
    };

    let mut examples = Vec::new();
    let mut unresolvable_dropped = 0usize;
    let mut skipped_splits = Vec::new();
    for y in yields {
        examples.extend(y.examples);
        unresolvable_dropped += y.dropped;
        skipped_splits.extend(y.skips);
    }
    if examples.is_empty() {
        return Err(PipelineError::Config(
            "forge produced no examples; check the annotator configuration".into(),
        ));
    }

    let partition = partition_dataset(
        examples.clone(),
        config.forge.test_fraction,
        config.forge.seed,
    )
    .map_err(PipelineError::Forge)?;

    write_jsonl(&config.out_dir.join("examples.jsonl"), &examples)?;
    write_jsonl(
        &config.out_dir.join("train_examples.jsonl"),
        &partition.train,
    )?;
    write_jsonl(&config.out_dir.join("test_examples.jsonl"), &partition.test)?;

    let report = ForgeReport {
        config_hash: config.forge_hash(),
        seed: config.forge.seed,
        stats: dataset_stats(&examples),
        train_stats: dataset_stats(&partition.train),
        test_stats: dataset_stats(&partition.test),
        unresolvable_dropped,
        skipped_splits,
        ingest_warnings: ingest.warnings,
    };
    write_json_pretty(&config.out_dir.join("forge_summary.json"), &report)?;

    StageMeta {
        stage: "forge".into(),
        config_hash: report.config_hash.clone(),
        seed: config.forge.seed,
        upstream: vec![StageRef {
            stage: "synth".into(),
            config_hash: config.synth_hash(),
        }],
        outputs: vec![
            "examples.jsonl".into(),
            "train_examples.jsonl".into(),
            "test_examples.jsonl".into(),
            "forge_summary.json".into(),
        ],
    }
    .write(&config.out_dir)?;

    Ok(report)
}

// ─── train ───────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub config_hash: String,
    pub seed: u64,
    pub steps_run: usize,
    pub best_step: usize,
    pub best_heldout_reward: Option<f64>,
    pub diverged_at: Option<usize>,
}

fn to_train_examples(examples: &[PredictionExample], workers: usize) -> Vec<TrainExample> {
    parallel_map(examples, workers, |_, e| TrainExample {
        example_id: e.example_id.clone(),
        features: featurize(&e.context_text, &e.question),
        label: e.label,
    })
}

pub fn run_train(config: &RunConfig) -> Result<TrainReport, PipelineError> {
    ensure_out_dir(config)?;
    StageMeta::check(
        &config.out_dir,
        "forge",
        &config.forge_hash(),
        "notecast forge",
    )?;
    let train_path = config.out_dir.join("train_examples.jsonl");
    require_file(&train_path, "notecast forge")?;
    let examples: Vec<PredictionExample> = read_jsonl(&train_path)?;

    let (fit_examples, heldout_examples) = if config.train.heldout_fraction > 0.0 {
        let partition =
            partition_dataset(examples, config.train.heldout_fraction, config.train.seed).map_err(
                |e| match e {
                    ForgeError::Partition(msg) => PipelineError::Config(format!(
                        "cannot carve a held-out slice for checkpoint selection: {msg}"
                    )),
                    other => PipelineError::Forge(other),
                },
            )?;
        (partition.train, partition.test)
    } else {
        (examples, Vec::new())
    };

    let fit = to_train_examples(&fit_examples, config.workers);
    let heldout = to_train_examples(&heldout_examples, config.workers);

    let train_config = TrainConfig {
        group_size: config.train.group_size,
        batch_size: config.train.batch_size,
        learning_rate: config.train.learning_rate,
        steps: config.train.steps,
        advantage_norm: config.train.advantage_norm,
        std_eps: config.train.std_eps,
        seed: config.train.seed,
        eval_every: config.train.eval_every,
    };
    let initial = LogisticPolicy::zeros(config.train.logit_noise_scale)?;

    let mut hook = |_step: usize, policy: &LogisticPolicy| -> f64 {
        heldout
            .iter()
            .map(|e| log_score(mean_forecast(policy, &e.features), e.label, DEFAULT_EPS))
            .sum::<f64>()
            / heldout.len() as f64
    };
    let outcome = if heldout.is_empty() {
        train(&initial, &fit, &train_config, None)?
    } else {
        train(&initial, &fit, &train_config, Some(&mut hook))?
    };

    let config_hash = config.train_hash();
    let checkpoint = PolicyCheckpoint::from_policy(
        &outcome.policy,
        outcome.best_step,
        outcome.best_heldout_reward,
        config_hash.clone(),
        config.train.seed,
    );
    write_json_pretty(&config.out_dir.join("checkpoint.json"), &checkpoint)?;

    let trace_path = config.out_dir.join("reward_trace.csv");
    let mut csv = format!("# config_hash={} seed={}\n", config_hash, config.train.seed);
    csv.push_str("step,mean_reward,heldout_reward\n");
    for record in &outcome.trace {
        let heldout_cell = record
            .heldout_reward
            .map(|h| format!("{h:.6}"))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{:.6},{}\n",
            record.step, record.mean_reward, heldout_cell
        ));
    }
    std::fs::write(&trace_path, csv).map_err(|e| io_err(&trace_path, e))?;

    StageMeta {
        stage: "train".into(),
        config_hash: config_hash.clone(),
        seed: config.train.seed,
        upstream: vec![StageRef {
            stage: "forge".into(),
            config_hash: config.forge_hash(),
        }],
        outputs: vec!["checkpoint.json".into(), "reward_trace.csv".into()],
    }
    .write(&config.out_dir)?;

    Ok(TrainReport {
        config_hash,
        seed: config.train.seed,
        steps_run: outcome.trace.len(),
        best_step: outcome.best_step,
        best_heldout_reward: outcome.best_heldout_reward,
        diverged_at: outcome.diverged_at,
    })
}

// ─── predict ─────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictReport {
    pub config_hash: String,
    pub seed: u64,
    pub model_name: String,
    pub dataset: DatasetSelector,
    pub n_examples: usize,
    pub n_predictions: usize,
    /// Examples excluded because the forecaster reply could not be parsed or
    /// transport failed after retries.
    pub n_failures: usize,
}

fn dataset_file(selector: DatasetSelector) -> &'static str {
    match selector {
        DatasetSelector::Train => "train_examples.jsonl",
        DatasetSelector::Test => "test_examples.jsonl",
        DatasetSelector::All => "examples.jsonl",
    }
}

enum BuiltForecaster {
    Constant(ConstantForecaster),
    Policy(PolicyForecaster),
    Endpoint(EndpointForecaster),
}

impl BuiltForecaster {
    fn as_dyn(&self) -> &dyn Forecaster {
        match self {
            BuiltForecaster::Constant(f) => f,
            BuiltForecaster::Policy(f) => f,
            BuiltForecaster::Endpoint(f) => f,
        }
    }

    /// Endpoint latency is worth recording; local forecasters report zero so
    /// their artifacts stay byte-stable.
    fn measures_latency(&self) -> bool {
        matches!(self, BuiltForecaster::Endpoint(_))
    }
}

fn build_forecaster(config: &RunConfig) -> Result<(BuiltForecaster, String), PipelineError> {
    let spec = &config.predict.forecaster;
    match spec.kind {
        ForecasterKind::Constant => {
            let rate = match spec.rate {
                Some(rate) => rate,
                None => {
                    let summary_path = config.out_dir.join("forge_summary.json");
                    require_file(&summary_path, "notecast forge")?;
                    let report: ForgeReport = read_json(&summary_path)?;
                    report.train_stats.positive_rate
                }
            };
            let forecaster = ConstantForecaster::new(rate)?;
            let name = format!("constant-{rate:.4}");
            Ok((BuiltForecaster::Constant(forecaster), name))
        }
        ForecasterKind::Policy => {
            let checkpoint_path = spec
                .checkpoint
                .clone()
                .unwrap_or_else(|| config.out_dir.join("checkpoint.json"));
            if spec.checkpoint.is_none() {
                StageMeta::check(
                    &config.out_dir,
                    "train",
                    &config.train_hash(),
                    "notecast train",
                )?;
            }
            require_file(&checkpoint_path, "notecast train")?;
            let checkpoint: PolicyCheckpoint = read_json(&checkpoint_path)?;
            let policy = checkpoint.into_policy()?;
            Ok((
                BuiltForecaster::Policy(PolicyForecaster::new(policy, spec.sample)),
                "logistic_policy".to_string(),
            ))
        }
        ForecasterKind::Endpoint => {
            let endpoint = spec.endpoint.as_ref().ok_or_else(|| {
                PipelineError::Config("endpoint forecaster needs an endpoint".into())
            })?;
            let model_name = spec
                .model_name
                .clone()
                .unwrap_or_else(|| "external".to_string());
            let template = match &spec.prompt_template {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                    PromptTemplate::new(text)
                }
                None => PromptTemplate::builtin(),
            };
            let forecaster = EndpointForecaster::new(
                endpoint,
                model_name.clone(),
                template,
                spec.marker.clone(),
            );
            Ok((BuiltForecaster::Endpoint(forecaster), model_name))
        }
    }
}

pub fn run_predict(config: &RunConfig) -> Result<PredictReport, PipelineError> {
    ensure_out_dir(config)?;
    StageMeta::check(
        &config.out_dir,
        "forge",
        &config.forge_hash(),
        "notecast forge",
    )?;
    let dataset_path = config.out_dir.join(dataset_file(config.predict.dataset));
    require_file(&dataset_path, "notecast forge")?;
    let examples: Vec<PredictionExample> = read_jsonl(&dataset_path)?;

    let (forecaster, model_name) = build_forecaster(config)?;
    let measure_latency = forecaster.measures_latency();

    let results: Vec<Result<PredictionRow, ForecastError>> =
        parallel_map(&examples, config.workers, |_, example| {
            let mut rng = derive_rng(config.predict.seed, &["predict", &example.example_id]);
            let started = Instant::now();
            forecaster
                .as_dyn()
                .forecast(&example.context_text, &example.question, &mut rng)
                .map(|sample| PredictionRow {
                    example_id: example.example_id.clone(),
                    model_name: model_name.clone(),
                    probability: sample.probability.clamp(0.0, 1.0),
                    trace: sample.trace,
                    latency_ms: if measure_latency {
                        started.elapsed().as_millis() as u64
                    } else {
                        0
                    },
                })
        });

    let mut rows = Vec::with_capacity(results.len());
    let mut n_failures = 0usize;
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(ForecastError::Parse(_)) | Err(ForecastError::Transport(_)) => n_failures += 1,
            Err(other) => return Err(other.into()),
        }
    }

    write_jsonl(&config.out_dir.join("predictions.jsonl"), &rows)?;

    let mut upstream = vec![StageRef {
        stage: "forge".into(),
        config_hash: config.forge_hash(),
    }];
    if config.predict.forecaster.kind == ForecasterKind::Policy {
        upstream.push(StageRef {
            stage: "train".into(),
            config_hash: config.train_hash(),
        });
    }
    StageMeta {
        stage: "predict".into(),
        config_hash: config.predict_hash(),
        seed: config.predict.seed,
        upstream,
        outputs: vec!["predictions.jsonl".into()],
    }
    .write(&config.out_dir)?;

    Ok(PredictReport {
        config_hash: config.predict_hash(),
        seed: config.predict.seed,
        model_name,
        dataset: config.predict.dataset,
        n_examples: examples.len(),
        n_predictions: rows.len(),
        n_failures,
    })
}

// ─── eval ────────────────────────────────────────────────────────────────────

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOutput {
    pub config_hash: String,
    pub seed: u64,
    pub model_name: String,
    pub dataset: DatasetSelector,
    /// Labeled examples with no surviving prediction (parse/transport
    /// failures upstream).
    pub n_missing_predictions: usize,
    pub report: MetricsReport,
}

pub fn run_eval(config: &RunConfig) -> Result<EvalOutput, PipelineError> {
    ensure_out_dir(config)?;
    StageMeta::check(
        &config.out_dir,
        "predict",
        &config.predict_hash(),
        "notecast predict",
    )?;
    let predictions_path = config.out_dir.join("predictions.jsonl");
    require_file(&predictions_path, "notecast predict")?;
    let rows: Vec<PredictionRow> = read_jsonl(&predictions_path)?;

    let dataset_path = config.out_dir.join(dataset_file(config.predict.dataset));
    require_file(&dataset_path, "notecast forge")?;
    let examples: Vec<PredictionExample> = read_jsonl(&dataset_path)?;

    let model_name = rows
        .first()
        .map(|r| r.model_name.clone())
        .unwrap_or_else(|| "unknown".to_string());
    let predictions: Vec<Prediction> = rows
        .iter()
        .map(|r| Prediction {
            example_id: r.example_id.clone(),
            probability: r.probability,
        })
        .collect();
    let labels: Vec<OutcomeLabel> = examples
        .iter()
        .map(|e| OutcomeLabel {
            example_id: e.example_id.clone(),
            label: e.label,
        })
        .collect();

    let report = evaluate(&predictions, &labels)?;
    let output = EvalOutput {
        config_hash: config.eval_hash(),
        seed: config.eval.seed,
        model_name,
        dataset: config.predict.dataset,
        n_missing_predictions: labels.len().saturating_sub(predictions.len()),
        report,
    };

    write_json_pretty(&config.out_dir.join("metrics.json"), &output)?;

    let bins_path = config.out_dir.join("reliability_bins.csv");
    let mut csv = format!(
        "# config_hash={} seed={}\n",
        output.config_hash, config.eval.seed
    );
    csv.push_str(&output.report.bins.to_csv());
    std::fs::write(&bins_path, csv).map_err(|e| io_err(&bins_path, e))?;

    StageMeta {
        stage: "eval".into(),
        config_hash: output.config_hash.clone(),
        seed: config.eval.seed,
        upstream: vec![StageRef {
            stage: "predict".into(),
            config_hash: config.predict_hash(),
        }],
        outputs: vec!["metrics.json".into(), "reliability_bins.csv".into()],
    }
    .write(&config.out_dir)?;

    Ok(output)
}

// ─── judge ───────────────────────────────────────────────────────────────────

/// Contents of `win_rates.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeOutput {
    pub config_hash: String,
    pub seed: u64,
    pub system_a: String,
    pub system_b: String,
    pub n_pairs_judged: usize,
    pub skipped_pairs: usize,
    pub table: WinRateTable,
}

pub fn run_judge(config: &RunConfig) -> Result<JudgeOutput, PipelineError> {
    ensure_out_dir(config)?;
    let judge_config = config
        .judge
        .as_ref()
        .ok_or_else(|| PipelineError::Config("judge stage is not configured".into()))?;
    let config_hash = config.judge_hash().expect("judge config present");

    StageMeta::check(
        &config.out_dir,
        "forge",
        &config.forge_hash(),
        "notecast forge",
    )?;
    let examples_path = config.out_dir.join("examples.jsonl");
    require_file(&examples_path, "notecast forge")?;
    let examples: Vec<PredictionExample> = read_jsonl(&examples_path)?;
    let by_id: BTreeMap<&str, &PredictionExample> = examples
        .iter()
        .map(|e| (e.example_id.as_str(), e))
        .collect();

    require_file(&judge_config.predictions_a, "notecast predict")?;
    require_file(&judge_config.predictions_b, "notecast predict")?;
    let rows_a: Vec<PredictionRow> = read_jsonl(&judge_config.predictions_a)?;
    let rows_b: Vec<PredictionRow> = read_jsonl(&judge_config.predictions_b)?;
    let system_a = rows_a
        .first()
        .map(|r| r.model_name.clone())
        .unwrap_or_default();
    let system_b = rows_b
        .first()
        .map(|r| r.model_name.clone())
        .unwrap_or_default();

    let map_a: BTreeMap<&str, &PredictionRow> =
        rows_a.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let map_b: BTreeMap<&str, &PredictionRow> =
        rows_b.iter().map(|r| (r.example_id.as_str(), r)).collect();

    let mut pairs = Vec::new();
    for (id, row_a) in &map_a {
        let (Some(row_b), Some(example)) = (map_b.get(id), by_id.get(id)) else {
            continue;
        };
        if row_a.trace.is_empty() || row_b.trace.is_empty() {
            continue;
        }
        pairs.push(TracePair {
            example_id: (*id).to_string(),
            context: example.context_text.clone(),
            question: example.question.clone(),
            trace_a: row_a.trace.clone(),
            trace_b: row_b.trace.clone(),
        });
        if let Some(max) = judge_config.max_pairs {
            if pairs.len() >= max {
                break;
            }
        }
    }
    if pairs.is_empty() {
        return Err(PipelineError::Config(
            "no joint predictions with nonempty traces to judge".into(),
        ));
    }

    let client: Box<dyn JudgeClient> = match judge_config.kind {
        JudgeKind::Endpoint => {
            let endpoint = judge_config
                .endpoint
                .as_ref()
                .ok_or_else(|| PipelineError::Config("endpoint judge needs an endpoint".into()))?;
            if judge_config.batch {
                Box::new(EndpointJudge::new_batched(endpoint))
            } else {
                Box::new(EndpointJudge::new(endpoint))
            }
        }
        JudgeKind::PreferFirst => Box::new(mock::PreferFirstJudge),
        JudgeKind::LongerTrace => Box::new(mock::LongerTraceJudge),
        JudgeKind::AlwaysTie => Box::new(mock::AlwaysTieJudge),
    };
    let options = PairwiseOptions {
        forced_choice: judge_config.forced_choice,
    };
    let outcome = run_pairwise(client.as_ref(), &pairs, judge_config.seed, &options)?;

    write_jsonl(&config.out_dir.join("verdicts.jsonl"), &outcome.verdicts)?;
    let table = aggregate(&outcome.verdicts)?;
    let output = JudgeOutput {
        config_hash: config_hash.clone(),
        seed: judge_config.seed,
        system_a,
        system_b,
        n_pairs_judged: table.n_pairs,
        skipped_pairs: outcome.skipped_pairs,
        table,
    };
    write_json_pretty(&config.out_dir.join("win_rates.json"), &output)?;

    StageMeta {
        stage: "judge".into(),
        config_hash,
        seed: judge_config.seed,
        upstream: vec![StageRef {
            stage: "forge".into(),
            config_hash: config.forge_hash(),
        }],
        outputs: vec!["verdicts.jsonl".into(), "win_rates.json".into()],
    }
    .write(&config.out_dir)?;

    Ok(output)
}

// ─── all ─────────────────────────────────────────────────────────────────────

/// Run synth → forge → train → predict → eval and return the final metrics.
pub fn run_all(config: &RunConfig) -> Result<EvalOutput, PipelineError> {
    run_synth(config)?;
    run_forge(config)?;
    run_train(config)?;
    run_predict(config)?;
    run_eval(config)
}
