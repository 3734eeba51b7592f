//! Ordered, concurrent dispatch of many prompts with a per-item retry budget.

use chrono::Utc;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::corpus::{Review, ReviewId};

use super::parse::parse_analysis_response;
use super::prompts::{render_analysis_prompt, Prompt};
use super::transcript::{TranscriptEntry, TranscriptLog};
use super::{ChatExchange, ChatProvider, ChatRequest, GatewayError, ParsedResponse};

/// One try plus up to three retries for unusable answers.
pub const MAX_ATTEMPTS: u32 = 4;

pub struct BatchOptions<'a> {
    pub temperature: f64,
    /// Items awaiting a reply at once; the provider may cap further.
    pub concurrency: usize,
    pub transcript: Option<&'a TranscriptLog>,
}

impl BatchOptions<'_> {
    pub fn new(temperature: f64) -> Self {
        Self {
            temperature,
            concurrency: 4,
            transcript: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemOutcome {
    Ok,
    Failed,
    TransportError,
}

/// One JSONL line of a generation or scoring log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLogEntry {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review_id: Option<ReviewId>,
    pub attempts: u32,
    pub outcome: ItemOutcome,
    /// Why each unsuccessful attempt was rejected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

pub(crate) struct ItemResult<T> {
    pub value: Option<T>,
    pub attempts: u32,
    pub errors: Vec<String>,
    pub transport: Option<GatewayError>,
}

impl<T> ItemResult<T> {
    pub fn outcome(&self) -> ItemOutcome {
        match (&self.value, &self.transport) {
            (Some(_), _) => ItemOutcome::Ok,
            (None, Some(_)) => ItemOutcome::TransportError,
            (None, None) => ItemOutcome::Failed,
        }
    }
}

/// Runs every prompt through `accept` until it yields a value or the attempt
/// budget runs out. Results come back in input order. The first transport
/// error stops the run; later items are dropped.
pub(crate) async fn run_prompts<T, F>(
    provider: &dyn ChatProvider,
    prompts: Vec<Prompt>,
    options: &BatchOptions<'_>,
    accept: F,
) -> Vec<ItemResult<T>>
where
    F: Fn(usize, &str) -> Result<(T, ParsedResponse), String> + Sync,
{
    let accept = &accept;
    let name = provider.name();
    let name = &name;
    let mut results = stream::iter(prompts.into_iter().enumerate())
        .map(|(index, prompt)| async move {
            let mut errors = Vec::new();
            for attempt in 0..MAX_ATTEMPTS {
                let nonce = index as u64 * MAX_ATTEMPTS as u64 + attempt as u64;
                let request = ChatRequest::new(&prompt, options.temperature, nonce);
                let started_at = Utc::now();
                let reply = provider.complete(&request).await;
                let finished_at = Utc::now();
                let (raw, verdict) = match reply {
                    Ok(raw) => {
                        let verdict = accept(index, &raw);
                        (raw, verdict)
                    }
                    Err(e) => {
                        errors.push(e.to_string());
                        return ItemResult {
                            value: None,
                            attempts: attempt + 1,
                            errors,
                            transport: Some(e),
                        };
                    }
                };
                if let Some(log) = options.transcript {
                    let (parsed, outcome) = match &verdict {
                        Ok((_, parsed)) => (Some(parsed.clone()), "ok".to_string()),
                        Err(e) => (None, e.clone()),
                    };
                    let entry = TranscriptEntry {
                        provider: name.clone(),
                        nonce,
                        started_at,
                        finished_at,
                        exchange: ChatExchange {
                            system_text: request.system.clone(),
                            user_text: request.user.clone(),
                            raw_response: raw,
                            parsed,
                        },
                        outcome,
                    };
                    if let Err(e) = log.record(&entry) {
                        tracing::error!("transcript write failed: {e}");
                    }
                }
                match verdict {
                    Ok((value, _)) => {
                        return ItemResult {
                            value: Some(value),
                            attempts: attempt + 1,
                            errors,
                            transport: None,
                        }
                    }
                    Err(e) => errors.push(e),
                }
            }
            ItemResult {
                value: None,
                attempts: MAX_ATTEMPTS,
                errors,
                transport: None,
            }
        })
        .buffered(options.concurrency.max(1));

    let mut out = Vec::new();
    while let Some(result) = results.next().await {
        let stop = result.transport.is_some();
        out.push(result);
        if stop {
            break;
        }
    }
    out
}

/// One line of a score file; alignment reads `review_id` and `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub review_id: ReviewId,
    pub score: f64,
    pub confidence: f64,
    pub explanation: String,
}

#[derive(Debug)]
pub struct ScoringOutcome {
    pub records: Vec<ScoreRecord>,
    pub log: Vec<BatchLogEntry>,
    /// Set when a transport failure cut the run short.
    pub aborted: Option<GatewayError>,
}

/// Scores every review with the analysis prompt, in input order.
pub async fn score_reviews(
    reviews: &[Review],
    provider: &dyn ChatProvider,
    options: &BatchOptions<'_>,
) -> ScoringOutcome {
    let prompts = reviews.iter().map(render_analysis_prompt).collect();
    let results = run_prompts(provider, prompts, options, |_, raw| {
        parse_analysis_response(raw)
            .map(|r| (r.clone(), ParsedResponse::AnalysisResult(r)))
            .map_err(|e| e.to_string())
    })
    .await;

    let mut outcome = ScoringOutcome {
        records: Vec::new(),
        log: Vec::new(),
        aborted: None,
    };
    for (index, result) in results.into_iter().enumerate() {
        let review_id = reviews[index].id;
        outcome.log.push(BatchLogEntry {
            index,
            target: None,
            review_id: Some(review_id),
            attempts: result.attempts,
            outcome: result.outcome(),
            errors: result.errors,
        });
        if let Some(r) = result.value {
            outcome.records.push(ScoreRecord {
                review_id,
                score: r.score,
                confidence: r.confidence,
                explanation: r.explanation,
            });
        }
        if result.transport.is_some() {
            outcome.aborted = result.transport;
        }
    }
    outcome
}
