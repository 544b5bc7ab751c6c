//! End-to-end orchestration: one declarative config, one artifact directory.
//!
//! Every stage has an explicit integer seed (a missing seed is a config
//! error, never ambient randomness) and a config hash chained through its
//! upstream stages. Each stage stamps its outputs with that hash, and
//! downstream stages verify the stamp before consuming an artifact, so any
//! upstream config change is detected instead of silently reusing stale
//! files.
//!
//! Artifact layout under `out_dir`:
//!
//! ```text
//! notes.jsonl, ground_truth.jsonl, synth.meta.json          (synth)
//! examples.jsonl, train_examples.jsonl, test_examples.jsonl,
//! forge_summary.json, forge.meta.json                       (forge)
//! checkpoint.json, reward_trace.csv, train.meta.json        (train)
//! predictions.jsonl, predict.meta.json                      (predict)
//! metrics.json, reliability_bins.csv, eval.meta.json        (eval)
//! verdicts.jsonl, win_rates.json, judge.meta.json           (judge)
//! ```

mod artifacts;
mod stages;

pub use artifacts::{read_jsonl, write_jsonl, PredictionRow, StageMeta, StageRef};
pub use stages::{
    run_all, run_eval, run_forge, run_judge, run_predict, run_synth, run_train, EvalOutput,
    ForgeReport, JudgeOutput, PredictReport, SynthReport, TrainReport,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{CorpusError, GeneratorConfig};
use crate::endpoint::EndpointConfig;
use crate::forecaster::{ContextBudget, ForecastError};
use crate::forge::ForgeError;
use crate::scoring::MetricsError;
use crate::trainer::{AdvantageNorm, TrainError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact {artifact}; produce it with `{produce_with}`")]
    MissingArtifact {
        artifact: String,
        produce_with: String,
    },
    #[error(
        "stale artifact from stage {stage}: stamped config hash {found} does not match the \
         current config ({expected}); rerun `{rerun}`"
    )]
    StaleArtifact {
        stage: String,
        expected: String,
        found: String,
        rerun: String,
    },
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("forge: {0}")]
    Forge(#[from] ForgeError),
    #[error("forecaster: {0}")]
    Forecast(#[from] ForecastError),
    #[error("trainer: {0}")]
    Train(#[from] TrainError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("judge: {0}")]
    Judge(#[from] crate::judge::JudgeError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {message}")]
    Json { path: String, message: String },
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::MissingArtifact { .. } => "missing_artifact",
            PipelineError::StaleArtifact { .. } => "stale_artifact",
            PipelineError::Corpus(_) => "corpus",
            PipelineError::Forge(_) => "forge",
            PipelineError::Forecast(_) => "forecast",
            PipelineError::Train(_) => "train",
            PipelineError::Metrics(_) => "metrics",
            PipelineError::Judge(_) => "judge",
            PipelineError::Io { .. } => "io",
            PipelineError::Json { .. } => "json",
        }
    }

    /// Single-line machine-parseable error JSON for the error stream.
    pub fn to_error_json(&self, stage: &str) -> String {
        serde_json::json!({
            "error": {
                "stage": stage,
                "code": self.code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

// ─── Stage configs ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStageConfig {
    /// Required: no ambient randomness.
    pub seed: u64,
    pub n_admissions: usize,
    #[serde(default)]
    pub generator: GeneratorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorKind {
    Rule,
    Endpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorSpec {
    pub kind: AnnotatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
}

impl Default for AnnotatorSpec {
    fn default() -> Self {
        AnnotatorSpec {
            kind: AnnotatorKind::Rule,
            endpoint: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgeStageConfig {
    pub seed: u64,
    /// Eligibility floor on notes per trajectory.
    #[serde(default = "default_min_notes")]
    pub min_notes: usize,
    #[serde(default = "default_questions_per_split")]
    pub questions_per_split: usize,
    #[serde(default = "default_min_context_notes")]
    pub min_context_notes: usize,
    #[serde(default = "default_min_future_notes")]
    pub min_future_notes: usize,
    /// One split per trajectory by default; more are allowed.
    #[serde(default = "default_splits_per_trajectory")]
    pub splits_per_trajectory: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub budget: ContextBudget,
    #[serde(default = "default_true")]
    pub include_discharge_in_resolution: bool,
    #[serde(default)]
    pub annotator: AnnotatorSpec,
}

fn default_min_notes() -> usize {
    9
}
fn default_questions_per_split() -> usize {
    10
}
fn default_min_context_notes() -> usize {
    3
}
fn default_min_future_notes() -> usize {
    1
}
fn default_splits_per_trajectory() -> usize {
    1
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainStageConfig {
    pub seed: u64,
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_advantage_norm")]
    pub advantage_norm: AdvantageNorm,
    #[serde(default = "default_std_eps")]
    pub std_eps: f64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Fraction of training patients held out for checkpoint selection;
    /// 0 disables held-out evaluation.
    #[serde(default = "default_heldout_fraction")]
    pub heldout_fraction: f64,
    /// σ of the policy's logit noise.
    #[serde(default = "default_sigma")]
    pub logit_noise_scale: f64,
}

fn default_group_size() -> usize {
    4
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_steps() -> usize {
    500
}
fn default_advantage_norm() -> AdvantageNorm {
    AdvantageNorm::MeanOnly
}
fn default_std_eps() -> f64 {
    1e-8
}
fn default_eval_every() -> usize {
    20
}
fn default_heldout_fraction() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSelector {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    Constant,
    Policy,
    Endpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterSpec {
    pub kind: ForecasterKind,
    /// Constant rate; when absent the training-set positive rate is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Checkpoint path for the policy kind; defaults to the run's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Sample the stochastic logit instead of forecasting at the mean.
    #[serde(default)]
    pub sample: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictStageConfig {
    pub seed: u64,
    #[serde(default = "default_dataset")]
    pub dataset: DatasetSelector,
    pub forecaster: ForecasterSpec,
}

fn default_dataset() -> DatasetSelector {
    DatasetSelector::Test
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalStageConfig {
    /// Provenance stamp only: evaluation itself is deterministic.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    Endpoint,
    PreferFirst,
    LongerTrace,
    AlwaysTie,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeStageConfig {
    pub seed: u64,
    pub predictions_a: PathBuf,
    pub predictions_b: PathBuf,
    #[serde(default = "default_judge_kind")]
    pub kind: JudgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    /// One endpoint call returning all four verdicts instead of one call per
    /// dimension.
    #[serde(default)]
    pub batch: bool,
    #[serde(default)]
    pub forced_choice: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
}

fn default_judge_kind() -> JudgeKind {
    JudgeKind::LongerTrace
}

/// The single declarative run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub synth: SynthStageConfig,
    pub forge: ForgeStageConfig,
    pub train: TrainStageConfig,
    pub predict: PredictStageConfig,
    pub eval: EvalStageConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<JudgeStageConfig>,
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        if self.synth.n_admissions == 0 {
            return Err(PipelineError::Config(
                "synth.n_admissions must be >= 1".into(),
            ));
        }
        self.synth
            .generator
            .validate()
            .map_err(PipelineError::Corpus)?;
        if !(self.forge.test_fraction > 0.0 && self.forge.test_fraction < 1.0) {
            return Err(PipelineError::Config(
                "forge.test_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if self.forge.splits_per_trajectory == 0 {
            return Err(PipelineError::Config(
                "forge.splits_per_trajectory must be >= 1".into(),
            ));
        }
        if self.forge.annotator.kind == AnnotatorKind::Endpoint
            && self.forge.annotator.endpoint.is_none()
        {
            return Err(PipelineError::Config(
                "forge.annotator.endpoint is required for the endpoint annotator".into(),
            ));
        }
        self.forge
            .budget
            .validate()
            .map_err(PipelineError::Forecast)?;
        if !(0.0..1.0).contains(&self.train.heldout_fraction) {
            return Err(PipelineError::Config(
                "train.heldout_fraction must lie in [0, 1)".into(),
            ));
        }
        match self.predict.forecaster.kind {
            ForecasterKind::Constant => {
                if let Some(rate) = self.predict.forecaster.rate {
                    if !(rate > 0.0 && rate < 1.0) {
                        return Err(PipelineError::Config(
                            "predict.forecaster.rate must lie strictly between 0 and 1".into(),
                        ));
                    }
                }
            }
            ForecasterKind::Endpoint => {
                if self.predict.forecaster.endpoint.is_none() {
                    return Err(PipelineError::Config(
                        "predict.forecaster.endpoint is required for the endpoint kind".into(),
                    ));
                }
            }
            ForecasterKind::Policy => {}
        }
        if let Some(judge) = &self.judge {
            if judge.kind == JudgeKind::Endpoint && judge.endpoint.is_none() {
                return Err(PipelineError::Config(
                    "judge.endpoint is required for the endpoint judge".into(),
                ));
            }
        }
        Ok(())
    }

    /// Override every stage seed at once (the `--seed-override` flag).
    pub fn override_seeds(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.forge.seed = seed;
        self.train.seed = seed;
        self.predict.seed = seed;
        self.eval.seed = seed;
        if let Some(judge) = &mut self.judge {
            judge.seed = seed;
        }
    }

    // Stage hash chain: each stage hashes its own canonical config together
    // with its upstream hashes, so an upstream change invalidates everything
    // downstream of it and nothing else.

    pub fn synth_hash(&self) -> String {
        stage_hash("synth", &self.synth, &[])
    }

    pub fn forge_hash(&self) -> String {
        stage_hash("forge", &self.forge, &[self.synth_hash()])
    }

    pub fn train_hash(&self) -> String {
        stage_hash("train", &self.train, &[self.forge_hash()])
    }

    pub fn predict_hash(&self) -> String {
        let mut upstream = vec![self.forge_hash()];
        if self.predict.forecaster.kind == ForecasterKind::Policy {
            upstream.push(self.train_hash());
        }
        stage_hash("predict", &self.predict, &upstream)
    }

    pub fn eval_hash(&self) -> String {
        stage_hash("eval", &self.eval, &[self.predict_hash()])
    }

    pub fn judge_hash(&self) -> Option<String> {
        self.judge
            .as_ref()
            .map(|judge| stage_hash("judge", judge, &[self.forge_hash()]))
    }
}

/// Canonical JSON: object keys sorted recursively, no whitespace.
pub fn canonical_json(value: &serde_json::Value) -> String {
    fn write(value: &serde_json::Value, out: &mut String) {
        match value {
            serde_json::Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push('{');
                for (i, key) in keys.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(key).unwrap());
                    out.push(':');
                    write(&map[*key], out);
                }
                out.push('}');
            }
            serde_json::Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(item, out);
                }
                out.push(']');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    write(value, &mut out);
    out
}

fn stage_hash<C: Serialize>(stage: &str, config: &C, upstream: &[String]) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    hasher.update([0u8]);
    hasher.update(canonical_json(&value).as_bytes());
    for up in upstream {
        hasher.update([0u8]);
        hasher.update(up.as_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
