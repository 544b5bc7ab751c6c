//! Stochastic logistic policy.
//!
//! The policy draws a logit z ~ Normal(w·x + b, σ) and forecasts
//! sigmoid(z). The sampled logit is recorded on the forecast so the trainer
//! can form exact score-function gradients; σ stays fixed during training.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::{featurize, FEATURE_BASIS_VERSION, FEATURE_DIM};
use super::{ForecastError, ForecastSample, Forecaster};
use crate::corpus::EventKind;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticPolicy {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// σ of the logit perturbation; strictly positive.
    pub logit_noise_scale: f64,
}

impl LogisticPolicy {
    /// Zero-initialized policy over the standard feature basis.
    pub fn zeros(logit_noise_scale: f64) -> Result<Self, ForecastError> {
        Self::new(vec![0.0; FEATURE_DIM], 0.0, logit_noise_scale)
    }

    pub fn new(
        weights: Vec<f64>,
        bias: f64,
        logit_noise_scale: f64,
    ) -> Result<Self, ForecastError> {
        if logit_noise_scale.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(ForecastError::Config(format!(
                "logit_noise_scale must be > 0, got {logit_noise_scale}"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(ForecastError::Config("non-finite policy parameters".into()));
        }
        Ok(LogisticPolicy {
            weights,
            bias,
            logit_noise_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Mean logit w·x + b.
    pub fn mean_logit(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.dim());
        self.weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }
}

/// Draw one stochastic forecast: z ~ Normal(w·x + b, σ), p = sigmoid(z).
pub fn sample_forecast<R: Rng + ?Sized>(
    policy: &LogisticPolicy,
    features: &[f64],
    rng: &mut R,
) -> ForecastSample {
    let mu = policy.mean_logit(features);
    let normal = Normal::new(mu, policy.logit_noise_scale).expect("sigma > 0");
    let z = normal.sample(rng);
    let probability = sigmoid(z);
    ForecastSample {
        probability,
        trace: policy_trace(policy, features, mu, z),
        noise_record: Some(z),
    }
}

/// Deterministic evaluation-mode forecast at the mean logit.
pub fn mean_forecast(policy: &LogisticPolicy, features: &[f64]) -> f64 {
    sigmoid(policy.mean_logit(features))
}

/// Fixed reasoning-trace template: names the strongest feature
/// contributions behind the sampled logit.
fn policy_trace(policy: &LogisticPolicy, features: &[f64], mu: f64, z: f64) -> String {
    let mut contributions: Vec<(usize, f64)> = policy
        .weights
        .iter()
        .zip(features)
        .enumerate()
        .map(|(i, (w, x))| (i, w * x))
        .filter(|(_, c)| c.abs() > 1e-12)
        .collect();
    contributions.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    contributions.truncate(3);

    let drivers = if contributions.is_empty() {
        "no active evidence features".to_string()
    } else {
        contributions
            .iter()
            .map(|(i, c)| format!("{}={:+.3}", feature_name(*i), c))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!(
        "Estimated probability {:.3} from logit {:.3} (mean {:.3}); strongest evidence: {}.",
        sigmoid(z),
        z,
        mu,
        drivers
    )
}

fn feature_name(index: usize) -> String {
    let kind_name = |i: usize| EventKind::ALL[i].as_str();
    match index {
        0..=5 => format!("precursor[{}]", kind_name(index)),
        6..=11 => format!("documented[{}]", kind_name(index - 6)),
        12 => "context_length".to_string(),
        13..=18 => format!(
            "category[{}]",
            crate::forge::QuestionCategory::ALL[index - 13].as_str()
        ),
        19..=24 => format!("recent_precursor[{}]", kind_name(index - 19)),
        25 => "question_precursor".to_string(),
        26 => "question_recent_precursor".to_string(),
        27 => "question_documented".to_string(),
        _ => format!("f{index}"),
    }
}

/// Forecaster adapter: featurizes (context, question) and samples the policy.
pub struct PolicyForecaster {
    policy: LogisticPolicy,
    /// Sample the stochastic logit when true; otherwise forecast at the mean.
    pub stochastic: bool,
}

impl PolicyForecaster {
    pub fn new(policy: LogisticPolicy, stochastic: bool) -> Self {
        PolicyForecaster { policy, stochastic }
    }

    pub fn policy(&self) -> &LogisticPolicy {
        &self.policy
    }
}

impl Forecaster for PolicyForecaster {
    fn name(&self) -> &str {
        "logistic_policy"
    }

    fn forecast(
        &self,
        context_text: &str,
        question: &str,
        rng: &mut dyn Rng,
    ) -> Result<ForecastSample, ForecastError> {
        let features = featurize(context_text, question);
        if self.stochastic {
            Ok(sample_forecast(&self.policy, &features, rng))
        } else {
            let mu = self.policy.mean_logit(&features);
            Ok(ForecastSample {
                probability: sigmoid(mu),
                trace: policy_trace(&self.policy, &features, mu, mu),
                noise_record: None,
            })
        }
    }
}

/// Checkpoint file contents for a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub logit_noise_scale: f64,
    pub feature_basis_version: u32,
    pub step: usize,
    pub heldout_reward: Option<f64>,
    pub config_hash: String,
    pub seed: u64,
}

impl PolicyCheckpoint {
    pub fn from_policy(
        policy: &LogisticPolicy,
        step: usize,
        heldout_reward: Option<f64>,
        config_hash: String,
        seed: u64,
    ) -> Self {
        PolicyCheckpoint {
            weights: policy.weights.clone(),
            bias: policy.bias,
            logit_noise_scale: policy.logit_noise_scale,
            feature_basis_version: FEATURE_BASIS_VERSION,
            step,
            heldout_reward,
            config_hash,
            seed,
        }
    }

    pub fn into_policy(self) -> Result<LogisticPolicy, ForecastError> {
        if self.feature_basis_version != FEATURE_BASIS_VERSION {
            return Err(ForecastError::Config(format!(
                "checkpoint feature basis v{} does not match this build (v{})",
                self.feature_basis_version, FEATURE_BASIS_VERSION
            )));
        }
        LogisticPolicy::new(self.weights, self.bias, self.logit_noise_scale)
    }
}
