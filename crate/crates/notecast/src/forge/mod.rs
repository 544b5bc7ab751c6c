//! Turning trajectories into leakage-free prediction examples.
//!
//! A split time divides each trajectory into observed context and withheld
//! future evidence. Questions are proposed from the context side only;
//! labels are resolved from the future side only. The two sides never mix:
//! that temporal wall is the defining property of the dataset.

mod endpoint;
mod partition;
mod rule;
mod split;

pub use endpoint::EndpointAnnotator;
pub use partition::{dataset_stats, partition_dataset, DatasetPartition, DatasetStats};
pub use rule::{rule_annotator, RuleAnnotator};
pub use split::{sample_split, SplitOptions};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Note, NoteCategory, Trajectory};
use crate::endpoint::EndpointError;
use crate::forecaster::{truncate_context, ContextBudget};

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("admission {admission_id}: no valid split position ({reason})")]
    NoValidSplit {
        admission_id: String,
        reason: String,
    },
    #[error("annotator failure: {0}")]
    Annotator(#[from] AnnotatorError),
    #[error("partition error: {0}")]
    Partition(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Error)]
pub enum AnnotatorError {
    #[error("transport: {0}")]
    Transport(#[from] EndpointError),
    #[error("configuration: {0}")]
    Config(String),
}

/// Question category, following the event families the questions target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionCategory {
    Medication,
    Procedure,
    OrganSupport,
    Microbiology,
    Mortality,
    Other,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 6] = [
        QuestionCategory::Medication,
        QuestionCategory::Procedure,
        QuestionCategory::OrganSupport,
        QuestionCategory::Microbiology,
        QuestionCategory::Mortality,
        QuestionCategory::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuestionCategory::Medication => "medication",
            QuestionCategory::Procedure => "procedure",
            QuestionCategory::OrganSupport => "organ_support",
            QuestionCategory::Microbiology => "microbiology",
            QuestionCategory::Mortality => "mortality",
            QuestionCategory::Other => "other",
        }
    }
}

/// A sampled division of one trajectory into context and future.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub admission_id: String,
    /// Strictly earlier than the trajectory's discharge time.
    pub split_time: DateTime<Utc>,
    /// Notes with timestamp ≤ split_time, in trajectory order.
    pub context_note_ids: Vec<String>,
    /// Notes with timestamp > split_time, in trajectory order.
    pub future_note_ids: Vec<String>,
}

/// One labeled prediction example: pre-split context, a question about a
/// future event, and the label resolved from post-split evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionExample {
    pub example_id: String,
    pub admission_id: String,
    pub patient_id: String,
    pub split_time: DateTime<Utc>,
    pub question: String,
    pub category: QuestionCategory,
    /// 1 iff the queried event occurs after the split and before discharge.
    pub label: u8,
    /// Derived only from notes with timestamp ≤ split_time.
    pub context_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Positive,
    Negative,
    Unresolvable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedQuestion {
    pub question: String,
    pub category: QuestionCategory,
}

/// Two-sided annotator capability. Implementations must only ever see the
/// text side they are handed: `propose_questions` receives pre-split context,
/// `resolve` receives post-split evidence.
pub trait Annotator {
    fn propose_questions(
        &self,
        context_text: &str,
    ) -> Result<Vec<ProposedQuestion>, AnnotatorError>;
    fn resolve(&self, question: &str, future_evidence: &str) -> Result<Resolution, AnnotatorError>;
}

/// Render one note the way forecasters and annotators see it.
pub fn format_note(note: &Note) -> String {
    let category = match note.category {
        NoteCategory::Nursing => "nursing",
        NoteCategory::Physician => "physician",
        NoteCategory::Radiology => "radiology",
        NoteCategory::Consult => "consult",
        NoteCategory::Discharge => "discharge",
        NoteCategory::Other => "other",
    };
    format!(
        "[{} {}] {}",
        note.timestamp.format("%Y-%m-%d %H:%M"),
        category,
        note.text
    )
}

#[derive(Debug, Clone)]
pub struct ExampleGenOptions {
    /// Upper bound on questions kept per split.
    pub questions_per_split: usize,
    /// Budget applied to the pre-split context.
    pub budget: ContextBudget,
    /// Whether discharge-category notes participate in label resolution.
    pub include_discharge_in_resolution: bool,
}

impl Default for ExampleGenOptions {
    fn default() -> Self {
        ExampleGenOptions {
            questions_per_split: 10,
            budget: ContextBudget::default(),
            include_discharge_in_resolution: true,
        }
    }
}

/// Examples produced for one split, plus the count of questions dropped as
/// unresolvable.
#[derive(Debug, Clone)]
pub struct GeneratedBatch {
    pub examples: Vec<PredictionExample>,
    pub unresolvable_dropped: usize,
}

/// Generate labeled examples for one split of one trajectory.
///
/// The annotator proposes questions from the truncated pre-split context and
/// resolves each against the post-split evidence only. Unresolvable
/// questions are dropped and counted.
pub fn generate_examples(
    trajectory: &Trajectory,
    split: &SplitPoint,
    annotator: &dyn Annotator,
    opts: &ExampleGenOptions,
) -> Result<GeneratedBatch, ForgeError> {
    if split.admission_id != trajectory.admission_id {
        return Err(ForgeError::InvalidOptions(format!(
            "split for {} applied to {}",
            split.admission_id, trajectory.admission_id
        )));
    }

    let context_texts: Vec<String> = trajectory
        .notes
        .iter()
        .filter(|n| n.timestamp <= split.split_time)
        .map(format_note)
        .collect();
    let future_texts: Vec<String> = trajectory
        .notes
        .iter()
        .filter(|n| n.timestamp > split.split_time)
        .filter(|n| opts.include_discharge_in_resolution || n.category != NoteCategory::Discharge)
        .map(format_note)
        .collect();

    let context_text = truncate_context(&context_texts, &opts.budget);
    let future_text = future_texts.join("\n\n");

    let proposed = annotator.propose_questions(&context_text)?;
    let mut examples = Vec::new();
    let mut unresolvable_dropped = 0usize;

    for (q_index, pq) in proposed
        .into_iter()
        .take(opts.questions_per_split)
        .enumerate()
    {
        match annotator.resolve(&pq.question, &future_text)? {
            Resolution::Unresolvable => unresolvable_dropped += 1,
            resolution => {
                let label = u8::from(resolution == Resolution::Positive);
                examples.push(PredictionExample {
                    example_id: format!(
                        "{}:t{}:q{:02}",
                        trajectory.admission_id,
                        split.split_time.timestamp(),
                        q_index
                    ),
                    admission_id: trajectory.admission_id.clone(),
                    patient_id: trajectory.patient_id.clone(),
                    split_time: split.split_time,
                    question: pq.question,
                    category: pq.category,
                    label,
                    context_text: context_text.clone(),
                });
            }
        }
    }

    Ok(GeneratedBatch {
        examples,
        unresolvable_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_cohort, GeneratorConfig};

    struct AllUnresolvable;
    impl Annotator for AllUnresolvable {
        fn propose_questions(&self, _: &str) -> Result<Vec<ProposedQuestion>, AnnotatorError> {
            Ok(vec![
                ProposedQuestion {
                    question: "q1".into(),
                    category: QuestionCategory::Other,
                },
                ProposedQuestion {
                    question: "q2".into(),
                    category: QuestionCategory::Other,
                },
            ])
        }
        fn resolve(&self, _: &str, _: &str) -> Result<Resolution, AnnotatorError> {
            Ok(Resolution::Unresolvable)
        }
    }

    #[test]
    fn all_unresolvable_yields_empty_batch() {
        let cohort = generate_synthetic_cohort(1, 1, &GeneratorConfig::default()).unwrap();
        let trajectory = &cohort.trajectories[0];
        let split = sample_split(trajectory, 5, &SplitOptions::default()).unwrap();
        let batch = generate_examples(
            trajectory,
            &split,
            &AllUnresolvable,
            &ExampleGenOptions::default(),
        )
        .unwrap();
        assert!(batch.examples.is_empty());
        assert_eq!(batch.unresolvable_dropped, 2);
    }

    #[test]
    fn context_text_only_from_pre_split_notes() {
        let cohort = generate_synthetic_cohort(2, 6, &GeneratorConfig::default()).unwrap();
        for trajectory in &cohort.trajectories {
            let split = sample_split(trajectory, 5, &SplitOptions::default()).unwrap();
            let annotator = rule_annotator(&cohort.tracks[&trajectory.admission_id]).unwrap();
            let batch = generate_examples(
                trajectory,
                &split,
                &annotator,
                &ExampleGenOptions::default(),
            )
            .unwrap();
            let expected: Vec<String> = trajectory
                .notes
                .iter()
                .filter(|n| n.timestamp <= split.split_time)
                .map(format_note)
                .collect();
            let expected_text = truncate_context(&expected, &ContextBudget::default());
            for example in &batch.examples {
                assert_eq!(example.context_text, expected_text);
            }
        }
    }

    #[test]
    fn questions_per_split_caps_output() {
        let cohort = generate_synthetic_cohort(3, 1, &GeneratorConfig::default()).unwrap();
        let trajectory = &cohort.trajectories[0];
        let split = sample_split(trajectory, 5, &SplitOptions::default()).unwrap();
        let annotator = rule_annotator(&cohort.tracks[&trajectory.admission_id]).unwrap();
        let opts = ExampleGenOptions {
            questions_per_split: 2,
            ..ExampleGenOptions::default()
        };
        let batch = generate_examples(trajectory, &split, &annotator, &opts).unwrap();
        assert!(batch.examples.len() <= 2);
    }
}
