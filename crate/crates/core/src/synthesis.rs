//! Scheduled generation of synthetic reviews.
//!
//! A [`GenerationSchedule`] lists the target sentiment positions and how many
//! reviews to request at each. [`generate_batch`] sends one generation prompt
//! per schedule item, checks every answer with [`validate_review`] and retries
//! unusable ones before logging them as failures.

use std::fmt;

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::{Review, ReviewId};
use crate::gateway::{
    parse_generation_response, render_generation_prompt, run_prompts, BatchLogEntry, BatchOptions,
    ChatProvider, GatewayError, ParsedResponse,
};

pub const DEFAULT_PER_POSITION: u32 = 35;
pub const MAX_FIELD_WORDS: usize = 40;
pub const EARLIEST_DATE: NaiveDate = match NaiveDate::from_ymd_opt(2020, 1, 15) {
    Some(d) => d,
    None => panic!("invalid date"),
};
pub const LATEST_DATE: NaiveDate = match NaiveDate::from_ymd_opt(2024, 10, 23) {
    Some(d) => d,
    None => panic!("invalid date"),
};

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("{0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSchedule {
    positions: Vec<f64>,
    per_position: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleItem {
    pub index: usize,
    pub target: f64,
    pub repetition: u32,
}

/// The eleven positions 0.0, 0.1, ..., 1.0.
pub fn default_positions() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn build_schedule(positions: &[f64], per_position: u32) -> Result<GenerationSchedule, SynthesisError> {
    if positions.is_empty() {
        return Err(SynthesisError::Domain("schedule needs at least one position".into()));
    }
    if per_position == 0 {
        return Err(SynthesisError::Domain("per_position must be positive".into()));
    }
    if let Some(p) = positions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(SynthesisError::Domain(format!("position {p} is outside [0, 1]")));
    }
    if let Some(w) = positions.windows(2).find(|w| w[0] >= w[1]) {
        return Err(SynthesisError::Domain(format!(
            "positions must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(GenerationSchedule {
        positions: positions.to_vec(),
        per_position,
    })
}

impl Default for GenerationSchedule {
    fn default() -> Self {
        build_schedule(&default_positions(), DEFAULT_PER_POSITION).expect("default schedule is valid")
    }
}

impl GenerationSchedule {
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn per_position(&self) -> u32 {
        self.per_position
    }

    pub fn total(&self) -> usize {
        self.positions.len() * self.per_position as usize
    }

    /// Position-major, then repetition.
    pub fn items(&self) -> Vec<ScheduleItem> {
        self.positions
            .iter()
            .flat_map(|&target| (0..self.per_position).map(move |r| (target, r)))
            .enumerate()
            .map(|(index, (target, repetition))| ScheduleItem {
                index,
                target,
                repetition,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ProsTooLong(usize),
    ConsTooLong(usize),
    DateBeforeRange(NaiveDate),
    DateAfterRange(NaiveDate),
    SentimentMissing,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProsTooLong(n) => write!(f, "pros exceeds {MAX_FIELD_WORDS} words ({n})"),
            Violation::ConsTooLong(n) => write!(f, "cons exceeds {MAX_FIELD_WORDS} words ({n})"),
            Violation::DateBeforeRange(d) => write!(f, "date before range ({d})"),
            Violation::DateAfterRange(d) => write!(f, "date after range ({d})"),
            Violation::SentimentMissing => f.write_str("orig_sentiment missing"),
        }
    }
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Empty when the review meets the generation constraints. Employment
/// status needs no check here: parsing only admits the two allowed values.
pub fn validate_review(review: &Review) -> Vec<Violation> {
    let mut out = Vec::new();
    let pros = word_count(&review.pros);
    if pros > MAX_FIELD_WORDS {
        out.push(Violation::ProsTooLong(pros));
    }
    let cons = word_count(&review.cons);
    if cons > MAX_FIELD_WORDS {
        out.push(Violation::ConsTooLong(cons));
    }
    if review.date_of_review < EARLIEST_DATE {
        out.push(Violation::DateBeforeRange(review.date_of_review));
    }
    if review.date_of_review > LATEST_DATE {
        out.push(Violation::DateAfterRange(review.date_of_review));
    }
    if review.orig_sentiment.is_none() {
        out.push(Violation::SentimentMissing);
    }
    out
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// Accepted reviews in schedule order, numbered from 1.
    pub reviews: Vec<Review>,
    pub log: Vec<BatchLogEntry>,
    pub aborted: Option<GatewayError>,
}

impl BatchOutcome {
    pub fn failures(&self) -> usize {
        self.log.iter().filter(|e| e.outcome != crate::gateway::ItemOutcome::Ok).count()
    }
}

/// Generates one review per schedule item. The model's own `orig_sentiment`
/// only has to be present; it is replaced by the item's position.
pub async fn generate_batch(
    schedule: &GenerationSchedule,
    provider: &dyn ChatProvider,
    options: &BatchOptions<'_>,
) -> BatchOutcome {
    let items = schedule.items();
    let prompts = items
        .iter()
        .map(|item| render_generation_prompt(item.target).expect("schedule positions are in range"))
        .collect();
    let results = run_prompts(provider, prompts, options, |index, raw| {
        let review = parse_generation_response(raw).map_err(|e| e.to_string())?;
        let violations = validate_review(&review);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(text.join("; "));
        }
        let mut review = review;
        review.orig_sentiment = Some(items[index].target);
        Ok((review.clone(), ParsedResponse::GeneratedReview(review)))
    })
    .await;

    let mut outcome = BatchOutcome {
        reviews: Vec::new(),
        log: Vec::new(),
        aborted: None,
    };
    for (item, result) in items.iter().zip(results) {
        let mut review_id = None;
        if let Some(mut review) = result.value.as_ref().cloned() {
            let id = ReviewId(outcome.reviews.len() as u64 + 1);
            review.id = id;
            review_id = Some(id);
            outcome.reviews.push(review);
        }
        outcome.log.push(BatchLogEntry {
            index: item.index,
            target: Some(item.target),
            review_id,
            attempts: result.attempts,
            outcome: result.outcome(),
            errors: result.errors,
        });
        if result.transport.is_some() {
            outcome.aborted = result.transport;
        }
    }
    outcome
}
