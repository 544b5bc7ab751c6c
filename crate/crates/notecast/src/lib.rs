//! Temporally grounded clinical forecasting from longitudinal narrative notes.
//!
//! The pipeline turns time-ordered admission notes into leakage-free
//! prediction examples, trains a stochastic probability forecaster with a
//! group-relative policy gradient under the log-score reward, and evaluates
//! forecasts with proper-scoring and calibration metrics.
//!
//! Stages (each also exposed as a CLI subcommand):
//!
//! 1. [`corpus`] — ingest or synthesize admission trajectories.
//! 2. [`forge`] — sample split times, generate questions from pre-split
//!    context, resolve labels from post-split evidence, partition by patient.
//! 3. [`forecaster`] — probability forecasters: constant baseline, trainable
//!    stochastic logistic policy, external endpoint adapter.
//! 4. [`trainer`] — group-relative policy-gradient training on the log score.
//! 5. [`scoring`] — reward, Brier, ECE, AUROC, top-k lift, reliability bins.
//! 6. [`judge`] — blind pairwise comparison of reasoning traces.
//! 7. [`pipeline`] — configuration, artifact files, and stage orchestration.

pub mod corpus;
pub mod endpoint;
pub mod forecaster;
pub mod forge;
pub mod judge;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod scoring;
pub mod trainer;
