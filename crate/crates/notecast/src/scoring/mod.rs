//! Proper-scoring reward and the evaluation metric suite.
//!
//! The training reward is the natural-log score
//! `y·ln p + (1−y)·ln(1−p)` on probabilities clamped to `[eps, 1−eps]`.
//! Evaluation adds Brier score, expected calibration error over ten
//! equal-width bins, rank-based AUROC with average ranks for ties, top-k
//! lift with deterministic tie-breaking, and reliability-diagram bins.
//!
//! All operations are pure functions over immutable inputs; metrics that are
//! undefined for an input (single-class AUROC, lift without positives) come
//! back absent rather than zeroed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_N_BINS: usize = 10;
pub const DEFAULT_TOP_K_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("prediction/label alignment failed: {0}")]
    Alignment(String),
    #[error("invalid metric parameter: {0}")]
    InvalidParameter(String),
}

/// A probability paired with its resolved outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrediction {
    pub example_id: String,
    pub probability: f64,
    pub label: u8,
}

/// A labeled prediction with its log-score reward attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub example_id: String,
    pub probability: f64,
    pub label: u8,
    /// Always ≤ 0 after clamping.
    pub reward: f64,
}

/// Natural-log score of `p` against binary `y`, with `p` clamped to
/// `[eps, 1−eps]` so the score stays finite.
pub fn log_score(p: f64, y: u8, eps: f64) -> f64 {
    let p = p.clamp(eps, 1.0 - eps);
    if y == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

/// Squared error `(p − y)²`.
pub fn brier(p: f64, y: u8) -> f64 {
    let d = p - f64::from(y);
    d * d
}

pub fn mean_log_score(predictions: &[LabeledPrediction], eps: f64) -> Result<f64, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::Undefined(
            "mean log score of empty set".into(),
        ));
    }
    Ok(predictions
        .iter()
        .map(|p| log_score(p.probability, p.label, eps))
        .sum::<f64>()
        / predictions.len() as f64)
}

pub fn mean_brier(predictions: &[LabeledPrediction]) -> Result<f64, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::Undefined("mean Brier of empty set".into()));
    }
    Ok(predictions
        .iter()
        .map(|p| brier(p.probability, p.label))
        .sum::<f64>()
        / predictions.len() as f64)
}

pub fn score_predictions(predictions: &[LabeledPrediction], eps: f64) -> Vec<ScoredPrediction> {
    predictions
        .iter()
        .map(|p| ScoredPrediction {
            example_id: p.example_id.clone(),
            probability: p.probability,
            label: p.label,
            reward: log_score(p.probability, p.label, eps),
        })
        .collect()
}

fn bin_index(p: f64, n_bins: usize) -> usize {
    (((p * n_bins as f64).floor() as isize).max(0) as usize).min(n_bins - 1)
}

/// Reliability-diagram bins: equal width on [0,1], last bin right-closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    /// n_bins + 1 edges: 0.0, 1/n, ..., 1.0.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Mean predicted probability per bin; absent for empty bins.
    pub mean_predicted: Vec<Option<f64>>,
    /// Empirical positive rate per bin; absent for empty bins.
    pub empirical_rate: Vec<Option<f64>>,
}

impl ReliabilityBins {
    pub fn compute(predictions: &[LabeledPrediction], n_bins: usize) -> Result<Self, MetricsError> {
        if n_bins == 0 {
            return Err(MetricsError::InvalidParameter("n_bins must be >= 1".into()));
        }
        let mut counts = vec![0usize; n_bins];
        let mut sum_p = vec![0.0f64; n_bins];
        let mut sum_y = vec![0.0f64; n_bins];
        for p in predictions {
            let b = bin_index(p.probability, n_bins);
            counts[b] += 1;
            sum_p[b] += p.probability;
            sum_y[b] += f64::from(p.label);
        }
        let mean_predicted = counts
            .iter()
            .zip(&sum_p)
            .map(|(&c, &s)| if c > 0 { Some(s / c as f64) } else { None })
            .collect();
        let empirical_rate = counts
            .iter()
            .zip(&sum_y)
            .map(|(&c, &s)| if c > 0 { Some(s / c as f64) } else { None })
            .collect();
        Ok(ReliabilityBins {
            bin_edges: (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect(),
            counts,
            mean_predicted,
            empirical_rate,
        })
    }

    /// CSV rows `(bin_low, bin_high, count, mean_pred, emp_rate)`; empty bins
    /// leave the mean columns blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count,mean_pred,emp_rate\n");
        for i in 0..self.counts.len() {
            let mean = self.mean_predicted[i]
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default();
            let rate = self.empirical_rate[i]
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:.1},{:.1},{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.counts[i],
                mean,
                rate
            ));
        }
        out
    }
}

/// Expected calibration error over `n_bins` equal-width bins:
/// Σ (count_b / N) · |mean_pred_b − empirical_rate_b| over nonempty bins.
pub fn ece(predictions: &[LabeledPrediction], n_bins: usize) -> Result<f64, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::Undefined(
            "ECE of empty prediction set".into(),
        ));
    }
    let bins = ReliabilityBins::compute(predictions, n_bins)?;
    let n = predictions.len() as f64;
    let mut total = 0.0;
    for i in 0..bins.counts.len() {
        if bins.counts[i] > 0 {
            let gap = (bins.mean_predicted[i].unwrap() - bins.empirical_rate[i].unwrap()).abs();
            total += bins.counts[i] as f64 / n * gap;
        }
    }
    Ok(total)
}

/// AUROC in Mann–Whitney form with average ranks for ties: the fraction of
/// (positive, negative) pairs ranked correctly, ties counted ½. Undefined
/// for single-class inputs.
pub fn auroc(predictions: &[LabeledPrediction]) -> Result<f64, MetricsError> {
    let n_pos = predictions.iter().filter(|p| p.label == 1).count();
    let n_neg = predictions.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::Undefined(
            "AUROC needs at least one positive and one negative".into(),
        ));
    }

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| {
        predictions[a]
            .probability
            .partial_cmp(&predictions[b].probability)
            .expect("finite probabilities")
    });

    // Average ranks within tie groups (1-based ranks).
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len()
            && predictions[order[j]].probability == predictions[order[i]].probability
        {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            if predictions[idx].label == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Event-rate enrichment in the top `k_fraction` of predictions.
///
/// The top ⌈k·N⌉ predictions by probability descending (ties broken by
/// `example_id` ascending) are compared with the overall rate:
/// `lift = rate_top / rate_all`. Undefined when there are no positives.
pub fn top_k_lift(predictions: &[LabeledPrediction], k_fraction: f64) -> Result<f64, MetricsError> {
    if !(k_fraction > 0.0 && k_fraction <= 1.0) {
        return Err(MetricsError::InvalidParameter(format!(
            "k_fraction must lie in (0,1], got {k_fraction}"
        )));
    }
    if predictions.is_empty() {
        return Err(MetricsError::Undefined(
            "lift of empty prediction set".into(),
        ));
    }
    let n = predictions.len();
    let n_pos = predictions.iter().filter(|p| p.label == 1).count();
    if n_pos == 0 {
        return Err(MetricsError::Undefined(
            "lift undefined with zero positives overall".into(),
        ));
    }

    let mut order: Vec<&LabeledPrediction> = predictions.iter().collect();
    order.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .expect("finite probabilities")
            .then_with(|| a.example_id.cmp(&b.example_id))
    });

    // ceil(k·N) with a dust guard so exact multiples stay exact.
    let top_n = ((k_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let top_pos = order[..top_n].iter().filter(|p| p.label == 1).count();

    let rate_top = top_pos as f64 / top_n as f64;
    let rate_all = n_pos as f64 / n as f64;
    Ok(rate_top / rate_all)
}

/// Full metrics report, mirroring the aggregate evaluation table plus
/// reliability bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub positive_rate: f64,
    pub mean_reward: f64,
    pub brier: f64,
    pub ece: f64,
    /// Absent (null) when undefined, e.g. single-class input.
    pub auroc: Option<f64>,
    /// Absent (null) when undefined, e.g. no positives.
    pub top_decile_lift: Option<f64>,
    pub bins: ReliabilityBins,
}

/// A bare (example_id, probability) pair, as read from predictions output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub probability: f64,
}

/// A bare (example_id, label) pair, as read from the example set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub example_id: String,
    pub label: u8,
}

/// Align predictions with labels by `example_id` and compute every metric.
///
/// Duplicated or unmatched ids on either side fail with the offending ids
/// listed. Undefined metrics come back absent, never zeroed.
pub fn evaluate(
    predictions: &[Prediction],
    labels: &[OutcomeLabel],
) -> Result<MetricsReport, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::Alignment("empty prediction set".into()));
    }

    let mut label_map: BTreeMap<&str, u8> = BTreeMap::new();
    let mut dup = Vec::new();
    for l in labels {
        if label_map.insert(l.example_id.as_str(), l.label).is_some() {
            dup.push(l.example_id.clone());
        }
    }
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    for p in predictions {
        if seen.insert(p.example_id.as_str(), ()).is_some() {
            dup.push(p.example_id.clone());
        }
    }
    if !dup.is_empty() {
        dup.sort();
        dup.dedup();
        return Err(MetricsError::Alignment(format!(
            "duplicated example ids: {}",
            dup.join(", ")
        )));
    }

    let mut missing: Vec<String> = Vec::new();
    let mut aligned: Vec<LabeledPrediction> = Vec::with_capacity(predictions.len());
    for p in predictions {
        match label_map.get(p.example_id.as_str()) {
            Some(&label) => aligned.push(LabeledPrediction {
                example_id: p.example_id.clone(),
                probability: p.probability,
                label,
            }),
            None => missing.push(p.example_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::Alignment(format!(
            "predictions without labels: {}",
            missing.join(", ")
        )));
    }
    // Deterministic reduction order regardless of input order.
    aligned.sort_by(|a, b| a.example_id.cmp(&b.example_id));

    let n = aligned.len();
    let n_pos = aligned.iter().filter(|p| p.label == 1).count();
    // A zero-variance predictor carries no ranking information: its AUROC
    // would be the all-ties 0.5, but the report leaves the cell absent the
    // way published baseline rows do.
    let constant_predictor = aligned
        .windows(2)
        .all(|w| w[0].probability == w[1].probability);
    Ok(MetricsReport {
        n,
        positive_rate: n_pos as f64 / n as f64,
        mean_reward: mean_log_score(&aligned, DEFAULT_EPS)?,
        brier: mean_brier(&aligned)?,
        ece: ece(&aligned, DEFAULT_N_BINS)?,
        auroc: if constant_predictor {
            None
        } else {
            auroc(&aligned).ok()
        },
        top_decile_lift: top_k_lift(&aligned, DEFAULT_TOP_K_FRACTION).ok(),
        bins: ReliabilityBins::compute(&aligned, DEFAULT_N_BINS)?,
    })
}
