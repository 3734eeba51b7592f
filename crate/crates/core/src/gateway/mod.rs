//! Prompt rendering, chat-completion providers and response parsing.
//!
//! Providers implement [`ChatProvider`]. [`HttpProvider`] talks to a real
//! endpoint with retries and a shared rate limiter; [`MockProvider`] answers
//! offline and deterministically from a seed.

mod batch;
mod http;
mod mock;
mod parse;
mod prompts;
mod transcript;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Review;

pub use batch::{
    score_reviews, BatchLogEntry, BatchOptions, ItemOutcome, ScoreRecord, ScoringOutcome, MAX_ATTEMPTS,
};
pub(crate) use batch::run_prompts;
pub use http::{HttpProvider, RateLimiter};
pub use mock::{lexicon_polarity, MockProvider, MOCK_NOISE};
pub use parse::{parse_analysis_response, parse_generation_response, strip_fences, AnalysisResult};
pub use prompts::{
    format_target, render_analysis_prompt, render_generation_prompt, Prompt,
    ANALYSIS_INSTRUCTIONS, GENERATION_INSTRUCTIONS, TARGET_LABEL,
};
pub use transcript::{TranscriptEntry, TranscriptLog};

/// Sampling temperature used for generation when the config sets none.
pub const GENERATION_TEMPERATURE: f64 = 1.0;
/// Sampling temperature used for analysis when the config sets none.
pub const ANALYSIS_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error("transport failed after {attempts} attempt(s) (last status {status:?}): {message}")]
    Transport {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("unparseable response: {message}")]
    Parse { message: String, raw: String },
}

/// Vendor payload shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiStyle {
    /// `POST {base}/chat/completions` with a bearer token.
    #[default]
    OpenAiChat,
    /// `POST {base}/messages` with an `x-api-key` header.
    AnthropicMessages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub api_style: ApiStyle,
    /// Overrides the per-stage defaults when set.
    pub temperature: Option<f64>,
    pub max_retries: u32,
    pub requests_per_minute: u32,
    pub timeout_seconds: u64,
    /// First backoff delay; doubles per retry.
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
    pub max_tokens: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model_name: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            api_style: ApiStyle::OpenAiChat,
            temperature: None,
            max_retries: 5,
            requests_per_minute: 60,
            timeout_seconds: 60,
            backoff_base_ms: 1000,
            max_in_flight: 4,
            max_tokens: 1024,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_retries > 10 {
            return Err(GatewayError::Config("max_retries must be at most 10".into()));
        }
        if self.requests_per_minute == 0 {
            return Err(GatewayError::Config("requests_per_minute must be at least 1".into()));
        }
        if self.timeout_seconds == 0 {
            return Err(GatewayError::Config("timeout_seconds must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config("max_in_flight must be positive".into()));
        }
        if let Some(t) = self.temperature {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(GatewayError::Config("temperature must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn generation_temperature(&self) -> f64 {
        self.temperature.unwrap_or(GENERATION_TEMPERATURE)
    }

    pub fn analysis_temperature(&self) -> f64 {
        self.temperature.unwrap_or(ANALYSIS_TEMPERATURE)
    }
}

/// Provider-neutral chat request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    /// Caller-assigned call index. Remote providers ignore it; the mock keys
    /// its randomness on it so concurrent dispatch stays deterministic.
    pub nonce: u64,
}

impl ChatRequest {
    pub fn new(prompt: &Prompt, temperature: f64, nonce: u64) -> Self {
        Self {
            system: prompt.system.clone(),
            user: prompt.user.clone(),
            temperature,
            nonce,
        }
    }
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;

    fn name(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedResponse {
    GeneratedReview(Review),
    AnalysisResult(AnalysisResult),
}

/// A prompt, the raw reply and, once parsing succeeded, its parsed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub system_text: String,
    pub user_text: String,
    pub raw_response: String,
    pub parsed: Option<ParsedResponse>,
}
