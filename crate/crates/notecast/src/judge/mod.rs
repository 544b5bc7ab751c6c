//! Blind pairwise comparison of reasoning traces.
//!
//! Each matched pair is shown to the judge in a randomized order with no
//! system identifiers, once per evaluation dimension. Stored verdicts stay
//! positional ("Response 1" vs "Response 2"); they are mapped back to true
//! system identities only during aggregation, using the recorded
//! presentation order.

pub mod mock;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::endpoint::{
    EndpointClient, EndpointConfig, JudgeBatchWireReply, JudgeWireReply, JudgeWireRequest,
};
use crate::rng::derive_fingerprint;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("transport: {0}")]
    Transport(#[from] crate::endpoint::EndpointError),
    #[error("unparseable judge reply: {0}")]
    Unparseable(String),
    #[error("pair {example_id} has an empty trace; both sides must be nonempty")]
    EmptyTrace { example_id: String },
    #[error("no verdicts to aggregate")]
    NoVerdicts,
}

/// The four comparison dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeDimension {
    ClinicalReasoning,
    MedicalKnowledge,
    Grounding,
    ClinicalUtility,
}

impl JudgeDimension {
    pub const ALL: [JudgeDimension; 4] = [
        JudgeDimension::ClinicalReasoning,
        JudgeDimension::MedicalKnowledge,
        JudgeDimension::Grounding,
        JudgeDimension::ClinicalUtility,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            JudgeDimension::ClinicalReasoning => "clinical_reasoning",
            JudgeDimension::MedicalKnowledge => "medical_knowledge",
            JudgeDimension::Grounding => "grounding",
            JudgeDimension::ClinicalUtility => "clinical_utility",
        }
    }
}

/// Which system a verdict favors. In stored verdicts this is *positional*
/// (`A` = first-presented response); [`JudgeVerdict::unblinded_winner`]
/// resolves it to the true system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Tie,
}

/// Whether system A's trace was presented first (`AB`) or second (`BA`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentedOrder {
    Ab,
    Ba,
}

/// One judged (pair, dimension) outcome, recorded before unblinding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub example_id: String,
    pub dimension: JudgeDimension,
    /// Positional: `A` means the first-presented response won.
    pub winner: Winner,
    pub presented_order: PresentedOrder,
}

impl JudgeVerdict {
    /// Map the positional verdict back to the true system identity.
    pub fn unblinded_winner(&self) -> Winner {
        match (self.winner, self.presented_order) {
            (Winner::Tie, _) => Winner::Tie,
            (w, PresentedOrder::Ab) => w,
            (Winner::A, PresentedOrder::Ba) => Winner::B,
            (Winner::B, PresentedOrder::Ba) => Winner::A,
        }
    }
}

/// A matched pair of traces over the same example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePair {
    pub example_id: String,
    pub context: String,
    pub question: String,
    pub trace_a: String,
    pub trace_b: String,
}

/// The judge's raw positional preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionVerdict {
    First,
    Second,
    Tie,
}

/// Blind call payload: responses are identified by position only.
#[derive(Debug, Clone)]
pub struct JudgeCall<'a> {
    pub context: &'a str,
    pub question: &'a str,
    pub response_1: &'a str,
    pub response_2: &'a str,
    pub dimension: JudgeDimension,
    pub tie_allowed: bool,
}

/// Pluggable judge: an HTTP endpoint or a deterministic mock.
pub trait JudgeClient {
    fn judge(&self, call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError>;

    /// Judge one pair across all four dimensions.
    ///
    /// The default makes one call per dimension, which isolates parse
    /// failures; batch-capable clients override this with a single call
    /// returning all four verdicts.
    fn judge_all(
        &self,
        call: &JudgeCall<'_>,
    ) -> Result<Vec<(JudgeDimension, PositionVerdict)>, JudgeError> {
        JudgeDimension::ALL
            .iter()
            .map(|&dimension| {
                let per_dimension = JudgeCall { dimension, ..*call };
                self.judge(&per_dimension)
                    .map(|verdict| (dimension, verdict))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PairwiseOptions {
    /// Disallow ties; a tie reply skips the pair like a parse failure.
    pub forced_choice: bool,
}

#[derive(Debug, Clone)]
pub struct PairwiseOutcome {
    pub verdicts: Vec<JudgeVerdict>,
    /// Pairs dropped because a reply was unparseable (or tied under forced
    /// choice).
    pub skipped_pairs: usize,
}

/// Judge every pair across all four dimensions.
///
/// Presentation order is randomized per `(seed, example_id)`; one verdict is
/// recorded per dimension per pair. A failed or unparseable reply skips the
/// whole pair and counts it.
pub fn run_pairwise(
    client: &dyn JudgeClient,
    pairs: &[TracePair],
    seed: u64,
    options: &PairwiseOptions,
) -> Result<PairwiseOutcome, JudgeError> {
    let mut verdicts = Vec::with_capacity(pairs.len() * JudgeDimension::ALL.len());
    let mut skipped_pairs = 0usize;

    for pair in pairs {
        if pair.trace_a.is_empty() || pair.trace_b.is_empty() {
            return Err(JudgeError::EmptyTrace {
                example_id: pair.example_id.clone(),
            });
        }
        let flip = derive_fingerprint(seed, &["judge-order", &pair.example_id]) & 1 == 1;
        let presented_order = if flip {
            PresentedOrder::Ba
        } else {
            PresentedOrder::Ab
        };
        let (response_1, response_2) = match presented_order {
            PresentedOrder::Ab => (pair.trace_a.as_str(), pair.trace_b.as_str()),
            PresentedOrder::Ba => (pair.trace_b.as_str(), pair.trace_a.as_str()),
        };

        // The dimension field is a placeholder here; judge_all substitutes
        // each dimension in turn (or sends one batched call).
        let call = JudgeCall {
            context: &pair.context,
            question: &pair.question,
            response_1,
            response_2,
            dimension: JudgeDimension::ClinicalReasoning,
            tie_allowed: !options.forced_choice,
        };
        match client.judge_all(&call) {
            Ok(dimension_verdicts) => {
                let tie_under_forced_choice = options.forced_choice
                    && dimension_verdicts
                        .iter()
                        .any(|(_, v)| *v == PositionVerdict::Tie);
                if tie_under_forced_choice {
                    skipped_pairs += 1;
                    continue;
                }
                for (dimension, position) in dimension_verdicts {
                    verdicts.push(JudgeVerdict {
                        example_id: pair.example_id.clone(),
                        dimension,
                        winner: match position {
                            PositionVerdict::First => Winner::A,
                            PositionVerdict::Second => Winner::B,
                            PositionVerdict::Tie => Winner::Tie,
                        },
                        presented_order,
                    });
                }
            }
            Err(JudgeError::EmptyTrace { example_id }) => {
                return Err(JudgeError::EmptyTrace { example_id })
            }
            Err(_) => skipped_pairs += 1,
        }
    }

    Ok(PairwiseOutcome {
        verdicts,
        skipped_pairs,
    })
}

/// Win rates for system A with ties worth half a win to each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateTable {
    /// Per-dimension win rate for system A, in [0,1].
    pub per_dimension: BTreeMap<JudgeDimension, f64>,
    /// Mean across all verdicts (not the mean of dimension rates).
    pub overall: f64,
    pub n_pairs: usize,
    pub n_verdicts: usize,
}

/// Aggregate verdicts into per-dimension and overall win rates for system A.
/// This is the unblinding step: positional winners are resolved against the
/// recorded presentation order. Invariant to verdict ordering.
pub fn aggregate(verdicts: &[JudgeVerdict]) -> Result<WinRateTable, JudgeError> {
    if verdicts.is_empty() {
        return Err(JudgeError::NoVerdicts);
    }

    let mut dim_wins: BTreeMap<JudgeDimension, (f64, usize)> = BTreeMap::new();
    let mut total_score = 0.0;
    for verdict in verdicts {
        let score = match verdict.unblinded_winner() {
            Winner::A => 1.0,
            Winner::Tie => 0.5,
            Winner::B => 0.0,
        };
        let entry = dim_wins.entry(verdict.dimension).or_insert((0.0, 0));
        entry.0 += score;
        entry.1 += 1;
        total_score += score;
    }

    let per_dimension = dim_wins
        .into_iter()
        .map(|(dim, (score, count))| (dim, score / count as f64))
        .collect();

    let mut pair_ids: Vec<&str> = verdicts.iter().map(|v| v.example_id.as_str()).collect();
    pair_ids.sort_unstable();
    pair_ids.dedup();

    Ok(WinRateTable {
        per_dimension,
        overall: total_score / verdicts.len() as f64,
        n_pairs: pair_ids.len(),
        n_verdicts: verdicts.len(),
    })
}

/// HTTP-backed judge speaking the shared endpoint wire format.
///
/// In batch mode one call carries `dimension: "all"` and the reply maps
/// every dimension to a verdict; otherwise each dimension is its own call,
/// which isolates parse failures.
pub struct EndpointJudge {
    client: EndpointClient,
    batched: bool,
}

impl EndpointJudge {
    pub fn new(config: &EndpointConfig) -> Self {
        EndpointJudge {
            client: EndpointClient::new(config),
            batched: false,
        }
    }

    pub fn new_batched(config: &EndpointConfig) -> Self {
        EndpointJudge {
            client: EndpointClient::new(config),
            batched: true,
        }
    }
}

fn parse_position_verdict(raw: &str) -> Result<PositionVerdict, JudgeError> {
    match raw {
        "response_1" => Ok(PositionVerdict::First),
        "response_2" => Ok(PositionVerdict::Second),
        "tie" => Ok(PositionVerdict::Tie),
        other => Err(JudgeError::Unparseable(format!("verdict {other:?}"))),
    }
}

impl JudgeClient for EndpointJudge {
    fn judge(&self, call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError> {
        let request = JudgeWireRequest {
            role: "judge".into(),
            context: call.context.to_string(),
            question: call.question.to_string(),
            response_1: call.response_1.to_string(),
            response_2: call.response_2.to_string(),
            dimension: call.dimension.as_str().to_string(),
            tie_allowed: call.tie_allowed,
        };
        let reply: JudgeWireReply = self.client.post_json(&request)?;
        parse_position_verdict(&reply.verdict)
    }

    fn judge_all(
        &self,
        call: &JudgeCall<'_>,
    ) -> Result<Vec<(JudgeDimension, PositionVerdict)>, JudgeError> {
        if !self.batched {
            return JudgeDimension::ALL
                .iter()
                .map(|&dimension| {
                    self.judge(&JudgeCall { dimension, ..*call })
                        .map(|v| (dimension, v))
                })
                .collect();
        }
        let request = JudgeWireRequest {
            role: "judge".into(),
            context: call.context.to_string(),
            question: call.question.to_string(),
            response_1: call.response_1.to_string(),
            response_2: call.response_2.to_string(),
            dimension: "all".into(),
            tie_allowed: call.tie_allowed,
        };
        let reply: JudgeBatchWireReply = self.client.post_json(&request)?;
        JudgeDimension::ALL
            .iter()
            .map(|&dimension| {
                let raw = reply.verdicts.get(dimension.as_str()).ok_or_else(|| {
                    JudgeError::Unparseable(format!("missing verdict for {}", dimension.as_str()))
                })?;
                parse_position_verdict(raw).map(|v| (dimension, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
