//! Probability forecasters.
//!
//! A forecaster maps (context, question) to a probability in [0,1] plus an
//! optional reasoning trace. Three implementations ship here: a constant
//! baseline, a trainable stochastic logistic policy over a fixed feature
//! basis, and an adapter for an external text endpoint.

mod endpoint;
mod features;
mod logistic;
mod truncate;

pub use endpoint::{parse_probability_reply, EndpointForecaster, PromptTemplate};
pub use features::{
    categorize_question, featurize, question_event_kind, FEATURE_BASIS_VERSION, FEATURE_DIM,
};
pub use logistic::{
    mean_forecast, sample_forecast, sigmoid, LogisticPolicy, PolicyCheckpoint, PolicyForecaster,
};
pub use truncate::truncate_context;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::endpoint::EndpointError;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("invalid forecaster configuration: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(#[from] EndpointError),
    #[error("unparseable forecast reply: {0}")]
    Parse(String),
}

/// One sampled forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSample {
    /// Always within [0,1]; external replies are clamped after parsing.
    pub probability: f64,
    /// Optional reasoning trace; empty for forecasters that do not reason.
    pub trace: String,
    /// The sampled logit for stochastic policies, absent otherwise.
    pub noise_record: Option<f64>,
}

/// Context budget in characters or whitespace tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    Characters,
    WhitespaceTokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextBudget {
    pub max_units: usize,
    pub unit: BudgetUnit,
}

impl Default for ContextBudget {
    fn default() -> Self {
        ContextBudget {
            max_units: 16_000,
            unit: BudgetUnit::WhitespaceTokens,
        }
    }
}

impl ContextBudget {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.max_units == 0 {
            return Err(ForecastError::Config("max_units must be > 0".into()));
        }
        Ok(())
    }
}

/// A probability forecaster over (context, question) pairs.
///
/// `rng` feeds stochastic implementations; deterministic forecasters ignore
/// it, so callers can always pass a derived per-example stream.
pub trait Forecaster {
    fn name(&self) -> &str;
    fn forecast(
        &self,
        context_text: &str,
        question: &str,
        rng: &mut dyn Rng,
    ) -> Result<ForecastSample, ForecastError>;
}

/// Baseline that answers every question with the same rate, typically the
/// training-set positive label rate.
#[derive(Debug, Clone)]
pub struct ConstantForecaster {
    rate: f64,
}

impl ConstantForecaster {
    /// `rate` must lie strictly inside (0,1): the log score is unbounded at
    /// the endpoints.
    pub fn new(rate: f64) -> Result<Self, ForecastError> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(ForecastError::Config(format!(
                "constant rate must lie strictly between 0 and 1, got {rate}"
            )));
        }
        Ok(ConstantForecaster { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Forecaster for ConstantForecaster {
    fn name(&self) -> &str {
        "constant"
    }

    fn forecast(
        &self,
        _context_text: &str,
        _question: &str,
        _rng: &mut dyn Rng,
    ) -> Result<ForecastSample, ForecastError> {
        Ok(ForecastSample {
            probability: self.rate,
            trace: String::new(),
            noise_record: None,
        })
    }
}
