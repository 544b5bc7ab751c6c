//! Group-relative policy-gradient training under the log-score reward.
//!
//! For each example in a batch the policy draws a group of G stochastic
//! forecasts; each is scored against the realized outcome and the rewards
//! are centered (and optionally std-normalized) within the group. The
//! parameter update is the exact score-function gradient of the Gaussian
//! logit policy:
//!
//! ```text
//! ∂/∂θ ln N(z; w·x + b, σ) = (z − μ)/σ² · (x, 1)
//! ```
//!
//! weighted by the group-relative advantage and averaged over the batch.
//! σ stays fixed; the optimizer is plain SGD so the gradient checks stay
//! exact. There is no KL regularizer to a reference policy.
//!
//! Advantage normalization defaults to mean-centering only. Dividing by the
//! group standard deviation rescales vanishing within-group reward
//! differences back to unit magnitude, so saturated examples keep receiving
//! constant-force pushes; with a reward monotone in the logit this never
//! damps, and without a KL anchor the logits of class-imbalanced features
//! run away instead of settling at the proper-scoring equilibrium.
//! `MeanStd` remains available as an ablation switch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecaster::{sample_forecast, ForecastSample, LogisticPolicy};
use crate::rng::derive_rng;
use crate::scoring::{log_score, DEFAULT_EPS};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("sample is missing its noise record; gradients need the sampled logit")]
    MissingNoiseRecord,
    #[error("non-finite gradient at step {step}: {diagnostics}")]
    NonFiniteGradient { step: usize, diagnostics: String },
    #[error("no training examples")]
    NoExamples,
}

/// How group rewards become advantages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageNorm {
    /// Subtract the group mean.
    MeanOnly,
    /// Subtract the group mean and divide by the population standard
    /// deviation (guarded by `std_eps`).
    MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub group_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub advantage_norm: AdvantageNorm,
    pub std_eps: f64,
    pub seed: u64,
    /// Held-out evaluation cadence in steps.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            group_size: 4,
            batch_size: 32,
            learning_rate: 0.1,
            steps: 500,
            advantage_norm: AdvantageNorm::MeanOnly,
            std_eps: 1e-8,
            seed: 0,
            eval_every: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.group_size < 2 {
            return Err(TrainError::InvalidConfig(
                "group_size must be >= 2 (advantages degenerate at 1)".into(),
            ));
        }
        if self.batch_size < 1 {
            return Err(TrainError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.std_eps.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(TrainError::InvalidConfig("std_eps must be > 0".into()));
        }
        if self.eval_every == 0 {
            return Err(TrainError::InvalidConfig("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One training example with its features precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub example_id: String,
    pub features: Vec<f64>,
    pub label: u8,
}

/// G samples of one example with their rewards and group-relative advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRollout {
    pub example_id: String,
    pub samples: Vec<ForecastSample>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// Center (and under `MeanStd` normalize) rewards within a group.
pub fn compute_advantages(rewards: &[f64], norm: AdvantageNorm, std_eps: f64) -> Vec<f64> {
    let g = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / g;
    match norm {
        AdvantageNorm::MeanOnly => rewards.iter().map(|r| r - mean).collect(),
        AdvantageNorm::MeanStd => {
            let variance = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g;
            let std = variance.sqrt();
            rewards
                .iter()
                .map(|r| (r - mean) / (std + std_eps))
                .collect()
        }
    }
}

/// Draw G independent forecasts for one example and attach rewards and
/// advantages.
pub fn rollout_group<R: rand::Rng + ?Sized>(
    policy: &LogisticPolicy,
    example: &TrainExample,
    group_size: usize,
    norm: AdvantageNorm,
    std_eps: f64,
    rng: &mut R,
) -> GroupRollout {
    let samples: Vec<ForecastSample> = (0..group_size)
        .map(|_| sample_forecast(policy, &example.features, rng))
        .collect();
    let rewards: Vec<f64> = samples
        .iter()
        .map(|s| log_score(s.probability, example.label, DEFAULT_EPS))
        .collect();
    let advantages = compute_advantages(&rewards, norm, std_eps);
    GroupRollout {
        example_id: example.example_id.clone(),
        samples,
        rewards,
        advantages,
    }
}

/// Mean score-function gradient over `(features, sampled logit, weight)`
/// items: weight · (z − μ)/σ² · (x, 1). Returns `(weight_grad, bias_grad)`.
///
/// The weight is the advantage during training; the raw reward recovers the
/// plain REINFORCE estimator for identity checks.
pub fn score_function_gradient<'a, I>(policy: &LogisticPolicy, items: I) -> (Vec<f64>, f64)
where
    I: IntoIterator<Item = (&'a [f64], f64, f64)>,
{
    let sigma_sq = policy.logit_noise_scale * policy.logit_noise_scale;
    let mut grad_w = vec![0.0; policy.dim()];
    let mut grad_b = 0.0;
    let mut count = 0usize;
    for (features, z, weight) in items {
        let mu = policy.mean_logit(features);
        let scale = weight * (z - mu) / sigma_sq;
        for (g, x) in grad_w.iter_mut().zip(features) {
            *g += scale * x;
        }
        grad_b += scale;
        count += 1;
    }
    if count > 0 {
        let n = count as f64;
        for g in grad_w.iter_mut() {
            *g /= n;
        }
        grad_b /= n;
    }
    (grad_w, grad_b)
}

/// One SGD ascent step from a batch of group rollouts.
///
/// Rollouts must have been sampled from `policy` (on-policy) and every
/// sample must carry its noise record.
pub fn policy_gradient_step(
    policy: &LogisticPolicy,
    batch: &[(&TrainExample, &GroupRollout)],
    learning_rate: f64,
) -> Result<LogisticPolicy, TrainError> {
    let mut items: Vec<(&[f64], f64, f64)> = Vec::new();
    for (example, rollout) in batch {
        for (sample, advantage) in rollout.samples.iter().zip(&rollout.advantages) {
            let z = sample.noise_record.ok_or(TrainError::MissingNoiseRecord)?;
            items.push((example.features.as_slice(), z, *advantage));
        }
    }
    let (grad_w, grad_b) = score_function_gradient(policy, items);

    if grad_w.iter().any(|g| !g.is_finite()) || !grad_b.is_finite() {
        return Err(TrainError::NonFiniteGradient {
            step: 0,
            diagnostics: format!(
                "bias_grad={grad_b}, first_bad_weight={:?}",
                grad_w.iter().find(|g| !g.is_finite())
            ),
        });
    }

    let weights: Vec<f64> = policy
        .weights
        .iter()
        .zip(&grad_w)
        .map(|(w, g)| w + learning_rate * g)
        .collect();
    let bias = policy.bias + learning_rate * grad_b;
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(TrainError::NonFiniteGradient {
            step: 0,
            diagnostics: format!(
                "update overflowed the parameters (learning_rate {learning_rate})"
            ),
        });
    }
    LogisticPolicy::new(weights, bias, policy.logit_noise_scale)
        .map_err(|e| TrainError::InvalidConfig(e.to_string()))
}

/// Per-step training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub mean_reward: f64,
    pub heldout_reward: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The checkpoint with the best held-out reward (the final policy when
    /// no eval hook is supplied).
    pub policy: LogisticPolicy,
    pub trace: Vec<StepRecord>,
    pub best_step: usize,
    pub best_heldout_reward: Option<f64>,
    /// Step at which training aborted on a non-finite reward or gradient.
    pub diverged_at: Option<usize>,
}

/// Held-out evaluation callback: `(step, policy) -> mean held-out reward`.
pub type EvalHook<'a> = &'a mut dyn FnMut(usize, &LogisticPolicy) -> f64;

/// Run GRPO-style training. Deterministic per `config.seed`: batch
/// composition comes from one derived stream and each rollout slot gets its
/// own `(seed, step, slot)` stream, so results do not depend on evaluation
/// order.
pub fn train(
    initial: &LogisticPolicy,
    examples: &[TrainExample],
    config: &TrainConfig,
    mut eval_hook: Option<EvalHook<'_>>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(TrainError::NoExamples);
    }
    for example in examples {
        if example.features.len() != initial.dim() {
            return Err(TrainError::InvalidConfig(format!(
                "example {} has {} features, policy expects {}",
                example.example_id,
                example.features.len(),
                initial.dim()
            )));
        }
    }

    let mut policy = initial.clone();
    let mut trace = Vec::with_capacity(config.steps);
    let mut batch_rng = derive_rng(config.seed, &["train", "batch"]);

    // The untrained policy is the first checkpoint candidate.
    let mut best_policy = policy.clone();
    let mut best_step = 0usize;
    let mut best_heldout = eval_hook.as_mut().map(|hook| hook(0, &policy));
    let mut diverged_at = None;

    for step in 0..config.steps {
        let indices: Vec<usize> = (0..config.batch_size)
            .map(|_| rand::RngExt::random_range(&mut batch_rng, 0..examples.len()))
            .collect();

        let rollouts: Vec<GroupRollout> = indices
            .iter()
            .enumerate()
            .map(|(slot, &idx)| {
                let mut rng = derive_rng(
                    config.seed,
                    &["rollout", &step.to_string(), &slot.to_string()],
                );
                rollout_group(
                    &policy,
                    &examples[idx],
                    config.group_size,
                    config.advantage_norm,
                    config.std_eps,
                    &mut rng,
                )
            })
            .collect();

        let n_rewards = rollouts.iter().map(|r| r.rewards.len()).sum::<usize>() as f64;
        let mean_reward = rollouts.iter().flat_map(|r| r.rewards.iter()).sum::<f64>() / n_rewards;
        if !mean_reward.is_finite() {
            diverged_at = Some(step);
            break;
        }

        let batch: Vec<(&TrainExample, &GroupRollout)> = indices
            .iter()
            .zip(&rollouts)
            .map(|(&idx, rollout)| (&examples[idx], rollout))
            .collect();
        match policy_gradient_step(&policy, &batch, config.learning_rate) {
            Ok(updated) => policy = updated,
            Err(TrainError::NonFiniteGradient { diagnostics, .. }) => {
                let _ = diagnostics;
                diverged_at = Some(step);
                break;
            }
            Err(other) => return Err(other),
        }

        let heldout = if (step + 1) % config.eval_every == 0 || step + 1 == config.steps {
            eval_hook.as_mut().map(|hook| hook(step + 1, &policy))
        } else {
            None
        };
        if let Some(h) = heldout {
            if best_heldout.is_none_or(|b| h > b) {
                best_heldout = Some(h);
                best_policy = policy.clone();
                best_step = step + 1;
            }
        }

        trace.push(StepRecord {
            step: step + 1,
            mean_reward,
            heldout_reward: heldout,
        });
    }

    let (policy, best_step, best_heldout_reward) = if eval_hook.is_some() {
        (best_policy, best_step, best_heldout)
    } else if diverged_at.is_some() {
        // No hook to rank checkpoints: fall back to the last finite policy,
        // which is the current one (the bad update was rejected).
        (policy, trace.len(), None)
    } else {
        (policy, config.steps, None)
    };

    Ok(TrainOutcome {
        policy,
        trace,
        best_step,
        best_heldout_reward,
        diverged_at,
    })
}

#[cfg(test)]
mod tests;
