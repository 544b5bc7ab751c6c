//! Shared HTTP JSON client for annotator, forecaster, and judge endpoints.
//!
//! All three roles speak the same framing: a JSON POST to the configured
//! base URL and a small JSON reply. Transport failures are retried up to a
//! configured limit with linear backoff, then surfaced as typed errors so
//! callers can decide whether to skip the work item.
//!
//! The only credential channel is the `NOTECAST_AUTH_TOKEN` environment
//! variable; when set it is attached as a bearer token.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the optional bearer token.
pub const AUTH_TOKEN_ENV: &str = "NOTECAST_AUTH_TOKEN";

#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}")]
    Http { status: u16 },
    #[error("could not parse endpoint reply: {0}")]
    Parse(String),
}

/// Connection settings for one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Additional attempts after the first failure.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_max_retries() -> u32 {
    2
}

pub struct EndpointClient {
    agent: ureq::Agent,
    base_url: String,
    auth_token: Option<String>,
    max_retries: u32,
}

impl EndpointClient {
    pub fn new(config: &EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        EndpointClient {
            agent,
            base_url: config.base_url.clone(),
            auth_token: std::env::var(AUTH_TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            max_retries: config.max_retries,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// POST `request` as JSON and parse the JSON reply, retrying transport
    /// failures. Non-2xx statuses and unparseable bodies are not retried.
    pub fn post_json<Req: Serialize, Reply: DeserializeOwned>(
        &self,
        request: &Req,
    ) -> Result<Reply, EndpointError> {
        let attempts = self.max_retries + 1;
        let mut last_message = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 * attempt as u64));
            }
            let mut builder = self.agent.post(&self.base_url);
            if let Some(token) = &self.auth_token {
                builder = builder.header("authorization", format!("Bearer {token}"));
            }
            match builder.send_json(request) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if !(200..300).contains(&status) {
                        return Err(EndpointError::Http { status });
                    }
                    return response
                        .body_mut()
                        .read_json::<Reply>()
                        .map_err(|e| EndpointError::Parse(e.to_string()));
                }
                Err(ureq::Error::StatusCode(status)) => {
                    return Err(EndpointError::Http { status });
                }
                Err(e) => last_message = e.to_string(),
            }
        }
        Err(EndpointError::Transport {
            attempts,
            message: last_message,
        })
    }
}

// ─── Wire formats ────────────────────────────────────────────────────────────

/// Annotator request: `role` is `"propose"` (context only, no question) or
/// `"resolve"` (future evidence plus the question under resolution).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatorRequest {
    pub role: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireQuestion {
    pub question: String,
    #[serde(default)]
    pub category: Option<String>,
}

/// Annotator reply: `{questions: [...]}` for propose, `{verdict}` for resolve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnnotatorReply {
    Questions { questions: Vec<WireQuestion> },
    Verdict { verdict: String },
}

/// Forecaster request: a fully rendered prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub role: String,
    pub model: String,
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastReply {
    pub text: String,
}

/// Judge request. Deliberately blind: the two responses are identified only
/// by presentation position and the payload carries no system names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeWireRequest {
    pub role: String,
    pub context: String,
    pub question: String,
    pub response_1: String,
    pub response_2: String,
    pub dimension: String,
    pub tie_allowed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeWireReply {
    /// `"response_1"`, `"response_2"`, or `"tie"`.
    pub verdict: String,
}

/// Batch-mode judge reply: one verdict per dimension name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeBatchWireReply {
    pub verdicts: std::collections::BTreeMap<String, String>,
}
