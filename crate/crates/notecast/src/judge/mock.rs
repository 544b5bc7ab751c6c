//! Deterministic judge mocks for offline runs and harness validation.

use super::{JudgeCall, JudgeClient, JudgeError, PositionVerdict};

/// Always prefers the first-presented response. Useful as a position-bias
/// probe: with randomized presentation, its unblinded win rate must land
/// near 0.5.
#[derive(Debug, Clone, Copy, Default)]
pub struct PreferFirstJudge;

impl JudgeClient for PreferFirstJudge {
    fn judge(&self, _call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError> {
        Ok(PositionVerdict::First)
    }
}

/// Always calls a tie.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysTieJudge;

impl JudgeClient for AlwaysTieJudge {
    fn judge(&self, _call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError> {
        Ok(PositionVerdict::Tie)
    }
}

/// Prefers the longer response, tie on equal length. A crude but
/// deterministic heuristic for endpoint-free demos.
#[derive(Debug, Clone, Copy, Default)]
pub struct LongerTraceJudge;

impl JudgeClient for LongerTraceJudge {
    fn judge(&self, call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError> {
        match call.response_1.len().cmp(&call.response_2.len()) {
            std::cmp::Ordering::Greater => Ok(PositionVerdict::First),
            std::cmp::Ordering::Less => Ok(PositionVerdict::Second),
            std::cmp::Ordering::Equal => Ok(PositionVerdict::Tie),
        }
    }
}

/// Fails every call; exercises the skip-and-count path.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrokenJudge;

impl JudgeClient for BrokenJudge {
    fn judge(&self, _call: &JudgeCall<'_>) -> Result<PositionVerdict, JudgeError> {
        Err(JudgeError::Unparseable("broken mock".into()))
    }
}
