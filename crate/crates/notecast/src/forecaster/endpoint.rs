//! Adapter for an external text-model endpoint.
//!
//! Renders a prompt from a template with `{instruction}`, `{context}` and
//! `{question}` placeholders, POSTs it, and parses the reply with a fixed
//! rule: the first number in [0,1] after the declared marker is the
//! probability, and everything after that number is kept as the reasoning
//! trace. The rule is bit-exact so benchmark comparisons stay reproducible.

use rand::Rng;

use crate::endpoint::{EndpointClient, EndpointConfig, ForecastReply, ForecastRequest};

use super::{ForecastError, ForecastSample, Forecaster};

pub const DEFAULT_MARKER: &str = "PROBABILITY:";

const DEFAULT_INSTRUCTION: &str = "You are given the clinical record available up to a \
prediction time, followed by a question about a possible later event in the same admission. \
Reply with a line of the form `PROBABILITY: <number between 0 and 1>` followed by your \
reasoning grounded in the record.";

/// Prompt template with `{instruction}`, `{context}`, `{question}`
/// placeholders.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    template: String,
}

impl PromptTemplate {
    pub fn new(template: String) -> Self {
        PromptTemplate { template }
    }

    /// Built-in template used when no template file is configured.
    pub fn builtin() -> Self {
        PromptTemplate::new(
            "{instruction}\n\n=== RECORD ===\n{context}\n\n=== QUESTION ===\n{question}\n".into(),
        )
    }

    pub fn render(&self, instruction: &str, context: &str, question: &str) -> String {
        self.template
            .replace("{instruction}", instruction)
            .replace("{context}", context)
            .replace("{question}", question)
    }
}

/// Parse `(probability, trace)` from an endpoint reply.
///
/// Scans for `marker`, then for the first numeric token after it that parses
/// to a value in [0,1]; the remainder of the reply after that token becomes
/// the trace. Anything else is a parse error.
pub fn parse_probability_reply(reply: &str, marker: &str) -> Result<(f64, String), ForecastError> {
    let marker_pos = reply
        .find(marker)
        .ok_or_else(|| ForecastError::Parse(format!("marker {marker:?} not found")))?;
    let after = &reply[marker_pos + marker.len()..];

    let bytes = after.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit()
            || (bytes[i] == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit())
        {
            let start = i;
            let mut end = i;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            let scanned = end;
            // A trailing period is sentence punctuation, not part of the number.
            while end > start && bytes[end - 1] == b'.' {
                end -= 1;
            }
            if let Ok(value) = after[start..end].parse::<f64>() {
                if (0.0..=1.0).contains(&value) {
                    let trace = after[end..].trim().to_string();
                    return Ok((value, trace));
                }
            }
            i = scanned;
        } else {
            i += 1;
        }
    }
    Err(ForecastError::Parse(
        "no number in [0,1] after the marker".into(),
    ))
}

pub struct EndpointForecaster {
    client: EndpointClient,
    model_name: String,
    template: PromptTemplate,
    marker: String,
    instruction: String,
}

impl EndpointForecaster {
    pub fn new(
        endpoint: &EndpointConfig,
        model_name: String,
        template: PromptTemplate,
        marker: Option<String>,
    ) -> Self {
        EndpointForecaster {
            client: EndpointClient::new(endpoint),
            model_name,
            template,
            marker: marker.unwrap_or_else(|| DEFAULT_MARKER.to_string()),
            instruction: DEFAULT_INSTRUCTION.to_string(),
        }
    }
}

impl Forecaster for EndpointForecaster {
    fn name(&self) -> &str {
        &self.model_name
    }

    fn forecast(
        &self,
        context_text: &str,
        question: &str,
        _rng: &mut dyn Rng,
    ) -> Result<ForecastSample, ForecastError> {
        let prompt = self
            .template
            .render(&self.instruction, context_text, question);
        let request = ForecastRequest {
            role: "forecast".into(),
            model: self.model_name.clone(),
            prompt,
        };
        let reply: ForecastReply = self.client.post_json(&request)?;
        let (probability, trace) = parse_probability_reply(&reply.text, &self.marker)?;
        Ok(ForecastSample {
            probability: probability.clamp(0.0, 1.0),
            trace,
            noise_record: None,
        })
    }
}
