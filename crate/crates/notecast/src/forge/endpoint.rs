//! HTTP-backed annotator.
//!
//! Requests carry only the permitted text side: `propose` sends pre-split
//! context and no question; `resolve` sends the question plus post-split
//! evidence. Verdicts outside {positive, negative, unresolvable} map to
//! unresolvable rather than failing the split.

use crate::endpoint::{AnnotatorReply, AnnotatorRequest, EndpointClient, EndpointConfig};

use super::{Annotator, AnnotatorError, ProposedQuestion, QuestionCategory, Resolution};

pub struct EndpointAnnotator {
    client: EndpointClient,
}

impl EndpointAnnotator {
    pub fn new(config: &EndpointConfig) -> Self {
        EndpointAnnotator {
            client: EndpointClient::new(config),
        }
    }
}

fn parse_category(raw: Option<&str>) -> QuestionCategory {
    match raw.unwrap_or("other") {
        "medication" => QuestionCategory::Medication,
        "procedure" => QuestionCategory::Procedure,
        "organ_support" => QuestionCategory::OrganSupport,
        "microbiology" => QuestionCategory::Microbiology,
        "mortality" => QuestionCategory::Mortality,
        _ => QuestionCategory::Other,
    }
}

impl Annotator for EndpointAnnotator {
    fn propose_questions(
        &self,
        context_text: &str,
    ) -> Result<Vec<ProposedQuestion>, AnnotatorError> {
        let request = AnnotatorRequest {
            role: "propose".into(),
            text: context_text.to_string(),
            question: None,
        };
        let reply: AnnotatorReply = self.client.post_json(&request)?;
        match reply {
            AnnotatorReply::Questions { questions } => Ok(questions
                .into_iter()
                .filter(|q| !q.question.is_empty())
                .map(|q| ProposedQuestion {
                    category: parse_category(q.category.as_deref()),
                    question: q.question,
                })
                .collect()),
            AnnotatorReply::Verdict { .. } => Err(AnnotatorError::Config(
                "propose call answered with a verdict reply".into(),
            )),
        }
    }

    fn resolve(&self, question: &str, future_evidence: &str) -> Result<Resolution, AnnotatorError> {
        let request = AnnotatorRequest {
            role: "resolve".into(),
            text: future_evidence.to_string(),
            question: Some(question.to_string()),
        };
        let reply: AnnotatorReply = self.client.post_json(&request)?;
        match reply {
            AnnotatorReply::Verdict { verdict } => Ok(match verdict.as_str() {
                "positive" => Resolution::Positive,
                "negative" => Resolution::Negative,
                // Malformed or out-of-set verdicts degrade to unresolvable.
                _ => Resolution::Unresolvable,
            }),
            AnnotatorReply::Questions { .. } => Err(AnnotatorError::Config(
                "resolve call answered with a propose reply".into(),
            )),
        }
    }
}
