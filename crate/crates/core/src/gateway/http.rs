use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use rand::Rng;
use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio::sync::{Mutex, Semaphore};
use tokio::time::Instant;

use super::{ApiStyle, ChatProvider, ChatRequest, GatewayError, ProviderConfig};

const ANTHROPIC_VERSION: &str = "2023-06-01";

/// Caps requests to `limit` in any sliding window.
///
/// Each send occupies a slot until `window` has elapsed since it was taken,
/// so no window of that length ever holds more than `limit` sends.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    sent: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(limit: usize, window: Duration) -> Self {
        assert!(limit > 0, "rate limit must be positive");
        Self {
            limit,
            window,
            sent: Mutex::new(VecDeque::with_capacity(limit)),
        }
    }

    pub fn per_minute(requests: u32) -> Self {
        Self::new(requests as usize, Duration::from_secs(60))
    }

    /// Waits for a free slot and claims it. Waiters are served in arrival
    /// order.
    pub async fn acquire(&self) {
        let mut sent = self.sent.lock().await;
        loop {
            let now = Instant::now();
            while sent
                .front()
                .is_some_and(|t| now.duration_since(*t) >= self.window)
            {
                sent.pop_front();
            }
            if sent.len() < self.limit {
                sent.push_back(now);
                return;
            }
            let oldest = *sent.front().expect("full queue is non-empty");
            tokio::time::sleep_until(oldest + self.window).await;
        }
    }
}

/// Chat-completion client for OpenAI- or Anthropic-style endpoints.
pub struct HttpProvider {
    config: ProviderConfig,
    api_key: String,
    client: reqwest::Client,
    limiter: Arc<RateLimiter>,
    in_flight: Semaphore,
}

enum Attempt {
    Done(String),
    Retry { status: Option<u16>, message: String },
}

impl HttpProvider {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: ProviderConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env).map_err(|_| {
            GatewayError::Config(format!(
                "API key variable {} is not set",
                config.api_key_env
            ))
        })?;
        Self::new(config, key)
    }

    pub fn new(config: ProviderConfig, api_key: String) -> Result<Self, GatewayError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_seconds))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        let limiter = Arc::new(RateLimiter::per_minute(config.requests_per_minute));
        let in_flight = Semaphore::new(config.max_in_flight);
        Ok(Self {
            config,
            api_key,
            client,
            limiter,
            in_flight,
        })
    }

    /// Shares a limiter across providers hitting the same account.
    pub fn with_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = limiter;
        self
    }

    fn backoff(&self, retry: u32) -> Duration {
        let base = self.config.backoff_base_ms as f64 * 2f64.powi(retry as i32);
        let jitter = rand::rng().random_range(0.5..=1.0);
        Duration::from_millis((base * jitter) as u64)
    }

    fn build(&self, request: &ChatRequest) -> reqwest::RequestBuilder {
        let base = self.config.base_url.trim_end_matches('/');
        match self.config.api_style {
            ApiStyle::OpenAiChat => {
                let mut messages = Vec::new();
                if !request.system.is_empty() {
                    messages.push(json!({"role": "system", "content": request.system}));
                }
                messages.push(json!({"role": "user", "content": request.user}));
                self.client
                    .post(format!("{base}/chat/completions"))
                    .bearer_auth(&self.api_key)
                    .json(&json!({
                        "model": self.config.model_name,
                        "messages": messages,
                        "temperature": request.temperature,
                    }))
            }
            ApiStyle::AnthropicMessages => self
                .client
                .post(format!("{base}/messages"))
                .header("x-api-key", &self.api_key)
                .header("anthropic-version", ANTHROPIC_VERSION)
                .json(&json!({
                    "model": self.config.model_name,
                    "max_tokens": self.config.max_tokens,
                    "system": request.system,
                    "messages": [{"role": "user", "content": request.user}],
                    "temperature": request.temperature,
                })),
        }
    }

    fn extract(&self, body: &Value) -> Option<String> {
        match self.config.api_style {
            ApiStyle::OpenAiChat => body["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string),
            ApiStyle::AnthropicMessages => {
                let blocks = body["content"].as_array()?;
                let text: String = blocks
                    .iter()
                    .filter(|b| b["type"] == "text")
                    .filter_map(|b| b["text"].as_str())
                    .collect();
                Some(text)
            }
        }
    }

    async fn attempt(&self, request: &ChatRequest, attempts: u32) -> Result<Attempt, GatewayError> {
        self.limiter.acquire().await;
        let _permit = self.in_flight.acquire().await.expect("semaphore never closed");
        let response = match self.build(request).send().await {
            Ok(r) => r,
            Err(e) => {
                return Ok(Attempt::Retry {
                    status: e.status().map(|s| s.as_u16()),
                    message: e.to_string(),
                })
            }
        };
        let status = response.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Ok(Attempt::Retry {
                status: Some(status.as_u16()),
                message: format!("HTTP {status}"),
            });
        }
        let body = response.text().await.map_err(|e| GatewayError::Transport {
            status: Some(status.as_u16()),
            attempts,
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(GatewayError::Transport {
                status: Some(status.as_u16()),
                attempts,
                message: body,
            });
        }
        let json: Value = serde_json::from_str(&body).map_err(|e| GatewayError::Transport {
            status: Some(status.as_u16()),
            attempts,
            message: format!("response is not JSON: {e}"),
        })?;
        self.extract(&json)
            .map(Attempt::Done)
            .ok_or_else(|| GatewayError::Transport {
                status: Some(status.as_u16()),
                attempts,
                message: format!("no message content in response: {body}"),
            })
    }
}

#[async_trait]
impl ChatProvider for HttpProvider {
    /// One request with retries on transport failures, 429 and 5xx.
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let mut retry = 0;
        loop {
            let attempts = retry + 1;
            match self.attempt(request, attempts).await? {
                Attempt::Done(text) => return Ok(text),
                Attempt::Retry { status, message } => {
                    if retry >= self.config.max_retries {
                        return Err(GatewayError::Transport {
                            status,
                            attempts,
                            message,
                        });
                    }
                    tracing::warn!(attempt = attempts, ?status, "retrying chat request: {message}");
                    tokio::time::sleep(self.backoff(retry)).await;
                    retry += 1;
                }
            }
        }
    }

    fn name(&self) -> String {
        format!("http:{}", self.config.model_name)
    }
}
