//! Fixed feature basis for the logistic policy.
//!
//! The basis is deterministic, question-aware, and versioned: checkpoints
//! record [`FEATURE_BASIS_VERSION`] and refuse to load under a different
//! basis. Layout (dimension [`FEATURE_DIM`] = 28):
//!
//! | index  | feature                                                    |
//! |--------|------------------------------------------------------------|
//! | 0..6   | precursor-phrase presence per event kind                    |
//! | 6..12  | confirmation-phrase presence per event kind (already-happened documentation) |
//! | 12     | context length, characters / 16000, clamped to [0,1]        |
//! | 13..19 | question-category one-hot                                   |
//! | 19..25 | recency-weighted precursor counts per event kind            |
//! | 25     | precursor presence for the question's own event kind        |
//! | 26     | recency-weighted precursor count for the question's kind    |
//! | 27     | confirmation presence for the question's own event kind     |

use crate::corpus::EventKind;
use crate::forge::QuestionCategory;

pub const FEATURE_DIM: usize = 28;
pub const FEATURE_BASIS_VERSION: u32 = 1;

const LENGTH_NORM: f64 = 16_000.0;

/// Identify which event kind a question asks about. Exact fixed phrasings
/// match first; otherwise a keyword scan decides; `None` for questions about
/// none of the known kinds.
pub fn question_event_kind(question: &str) -> Option<EventKind> {
    for kind in EventKind::ALL {
        if question == kind.question() {
            return Some(kind);
        }
    }
    let lower = question.to_lowercase();
    if lower.contains("vasopressor") {
        Some(EventKind::VasopressorStart)
    } else if lower.contains("transfusion") || lower.contains("packed red blood") {
        Some(EventKind::Transfusion)
    } else if lower.contains("dialysis") || lower.contains("renal replacement") {
        Some(EventKind::Dialysis)
    } else if lower.contains("intubation") || lower.contains("mechanical ventilation") {
        Some(EventKind::Intubation)
    } else if lower.contains("culture") {
        Some(EventKind::PositiveCulture)
    } else if lower.contains("dead") || lower.contains("death") || lower.contains("die") {
        Some(EventKind::InHospitalDeath)
    } else {
        None
    }
}

/// Category for a question, derived from its event kind when recognized.
pub fn categorize_question(question: &str) -> QuestionCategory {
    question_event_kind(question)
        .map(|k| k.category())
        .unwrap_or(QuestionCategory::Other)
}

/// Sum of recency weights over all occurrences of `phrase` in `text`.
/// An occurrence ending at the end of the context weighs 1; earlier
/// occurrences weigh proportionally less.
fn recency_weighted_count(text: &str, phrase: &str) -> f64 {
    if text.is_empty() || phrase.is_empty() {
        return 0.0;
    }
    let total = text.len() as f64;
    let mut sum = 0.0;
    let mut from = 0usize;
    while let Some(pos) = text[from..].find(phrase) {
        let end = from + pos + phrase.len();
        sum += end as f64 / total;
        from = end;
    }
    sum
}

/// Deterministic feature vector for a (context, question) pair.
pub fn featurize(context_text: &str, question: &str) -> Vec<f64> {
    let mut features = vec![0.0; FEATURE_DIM];

    for (i, kind) in EventKind::ALL.iter().enumerate() {
        let precursor_hit = kind
            .precursor_bank()
            .iter()
            .any(|p| context_text.contains(p));
        features[i] = f64::from(precursor_hit);
        features[6 + i] = f64::from(context_text.contains(kind.confirmation_phrase()));
        features[19 + i] = kind
            .precursor_bank()
            .iter()
            .map(|p| recency_weighted_count(context_text, p))
            .sum();
    }

    features[12] = (context_text.chars().count() as f64 / LENGTH_NORM).min(1.0);

    let category = categorize_question(question);
    let cat_index = QuestionCategory::ALL
        .iter()
        .position(|c| *c == category)
        .unwrap();
    features[13 + cat_index] = 1.0;

    if let Some(kind) = question_event_kind(question) {
        let k = EventKind::ALL.iter().position(|x| *x == kind).unwrap();
        features[25] = features[k];
        features[26] = features[19 + k];
        features[27] = features[6 + k];
    }

    features
}
