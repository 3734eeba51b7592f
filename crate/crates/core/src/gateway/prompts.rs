use crate::corpus::Review;

use super::GatewayError;

/// Review-generation instructions; the target score follows on its own line.
pub const GENERATION_INSTRUCTIONS: &str = "You will produce a hypothetical employer review from a hypothetical employee. I will give you a sentiment score between 0.0-1.0, where 0.0 is most negative and 1.0 is most positive. For each sentiment number, you should produce a review that is aligned with that sentiment. The review will consist of six components: Original sentiment, date of review (randomly generated with Gregorian date format M/D/YYYY between 1/15/2020 through 10/23/2024), employee status (current employee or former employee, randomly generated), job title (randomly generated, different from each other), pros, and cons. Pros and cons will be written in paragraph form and will be no more than 40 words in length each. Output the data as a CSV with order data including orig_sentiment, date_of_review, emp_status, job_title, pros, and cons. Use pipe as delimiter and include headers. Double quote all text fields.";

/// Single-score analysis instructions; the review's pros and cons follow.
pub const ANALYSIS_INSTRUCTIONS: &str = "You are an insider threat analyst. I will provide a job review consisting of pros and cons. Based on your implicit understanding of sentiment, analyze the job review for insider threat sentiment, and provide a sentiment score between 0.00-1.00 inclusive (to two decimal places) where is 0.00 is a completely negative sentiment and 1.00 is a completely positive sentiment. Include your confidence in the accuracy of the score to two decimal places. Additionally, provide a carefully crafted contextual explanation for the sentiment score that is related to the meaning of the text. Please provide your response in a text-based csv format on one line, with columns for the sentiment score, confidence, and explanation. Please do not provide any other response aside from the csv formatted data.";

pub const TARGET_LABEL: &str = "Sentiment score: ";

/// A rendered prompt: fixed instructions as the system message, the
/// per-item payload as the user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// Single-text view: instructions, blank line, payload.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

/// One decimal place for grid targets; full precision otherwise so that
/// distinct targets never share a label.
pub fn format_target(target: f64) -> String {
    if ((target * 10.0).round() / 10.0 - target).abs() < 1e-12 {
        format!("{target:.1}")
    } else {
        target.to_string()
    }
}

pub fn render_generation_prompt(target: f64) -> Result<Prompt, GatewayError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(GatewayError::Domain(format!("target sentiment {target} outside [0, 1]")));
    }
    Ok(Prompt {
        system: GENERATION_INSTRUCTIONS.to_string(),
        user: format!("{TARGET_LABEL}{}", format_target(target)),
    })
}

fn or_none(field: &str) -> &str {
    if field.trim().is_empty() {
        "(none)"
    } else {
        field
    }
}

pub fn render_analysis_prompt(review: &Review) -> Prompt {
    Prompt {
        system: ANALYSIS_INSTRUCTIONS.to_string(),
        user: format!("Pros: {}\nCons: {}", or_none(&review.pros), or_none(&review.cons)),
    }
}
