//! Deterministic rule-based annotator for synthetic corpora.
//!
//! Stands in for a model-based annotator: proposes the fixed question for
//! each configured event kind and resolves a question positive iff that
//! kind's confirmation phrase appears in the future evidence. Because the
//! synthetic generator writes the confirmation phrase into exactly the note
//! whose timestamp is the event's occurrence time, these labels agree with
//! the latent-track oracle for every valid split.

use crate::corpus::{EventKind, LatentEventTrack};

use super::{Annotator, AnnotatorError, ProposedQuestion, Resolution};

#[derive(Debug, Clone)]
pub struct RuleAnnotator {
    kinds: Vec<EventKind>,
}

impl RuleAnnotator {
    /// Annotator asking about the given kinds, in the given order.
    pub fn with_kinds(kinds: Vec<EventKind>) -> Result<Self, AnnotatorError> {
        if kinds.is_empty() {
            return Err(AnnotatorError::Config(
                "rule annotator requires at least one event kind".into(),
            ));
        }
        Ok(RuleAnnotator { kinds })
    }

    fn kind_for_question(&self, question: &str) -> Option<EventKind> {
        self.kinds
            .iter()
            .copied()
            .find(|k| k.question() == question)
    }
}

/// Build a rule annotator covering the event kinds present in the latent
/// tracks of one admission.
pub fn rule_annotator(tracks: &[LatentEventTrack]) -> Result<RuleAnnotator, AnnotatorError> {
    let mut kinds: Vec<EventKind> = tracks.iter().map(|t| t.event_kind).collect();
    kinds.sort();
    kinds.dedup();
    RuleAnnotator::with_kinds(kinds)
}

impl Annotator for RuleAnnotator {
    fn propose_questions(
        &self,
        _context_text: &str,
    ) -> Result<Vec<ProposedQuestion>, AnnotatorError> {
        Ok(self
            .kinds
            .iter()
            .map(|kind| ProposedQuestion {
                question: kind.question().to_string(),
                category: kind.category(),
            })
            .collect())
    }

    fn resolve(&self, question: &str, future_evidence: &str) -> Result<Resolution, AnnotatorError> {
        match self.kind_for_question(question) {
            Some(kind) => {
                if future_evidence.contains(kind.confirmation_phrase()) {
                    Ok(Resolution::Positive)
                } else {
                    Ok(Resolution::Negative)
                }
            }
            None => Ok(Resolution::Unresolvable),
        }
    }
}
