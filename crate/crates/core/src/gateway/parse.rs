use serde::{Deserialize, Serialize};

use crate::corpus::{parse_reviews, Review, Source, HEADER_COLUMNS};
use crate::rubric::validate_score;

use super::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub score: f64,
    pub confidence: f64,
    pub explanation: String,
}

impl AnalysisResult {
    /// The single-line CSV shape the analysis prompt asks for.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{:.2},{:.2},\"{}\"",
            self.score,
            self.confidence,
            self.explanation.replace('"', "'")
        )
    }
}

fn parse_error(message: impl Into<String>, raw: &str) -> GatewayError {
    GatewayError::Parse {
        message: message.into(),
        raw: raw.to_string(),
    }
}

/// Removes a leading ```` ``` ```` fence line (with optional language tag)
/// and a trailing fence, then surrounding whitespace. Nothing else.
pub fn strip_fences(raw: &str) -> &str {
    let mut text = raw.trim();
    if text.starts_with("```") {
        text = match text.find('\n') {
            Some(i) => &text[i + 1..],
            // Single-line fenced text: ```0.1,0.9,"x"```
            None => &text[3..],
        };
    }
    if let Some(stripped) = text.trim_end().strip_suffix("```") {
        text = stripped;
    }
    text.trim()
}

fn unquote(field: &str) -> &str {
    let f = field.trim();
    f.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(f)
        .trim()
}

fn parse_unit(field: &str, what: &str, raw: &str) -> Result<f64, GatewayError> {
    let value: f64 = unquote(field)
        .parse()
        .map_err(|_| parse_error(format!("{what} {field:?} is not a number"), raw))?;
    validate_score(value).map_err(|e| parse_error(format!("{what}: {e}"), raw))
}

fn is_header_line(line: &str) -> bool {
    let first = line.split([',', '|']).next().unwrap_or("");
    unquote(first).parse::<f64>().is_err() && line.to_lowercase().contains("score")
}

pub fn parse_analysis_response(raw: &str) -> Result<AnalysisResult, GatewayError> {
    let body = strip_fences(raw);
    let lines: Vec<&str> = body.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let line = match lines.as_slice() {
        [one] => *one,
        // A column header above the data line is tolerated.
        [header, one] if is_header_line(header) => *one,
        [] => return Err(parse_error("empty response", raw)),
        _ => return Err(parse_error("expected a single CSV line", raw)),
    };

    // Whichever delimiter shows up first separates the fields.
    let delimiter = line.chars().find(|c| matches!(c, ',' | '|')).unwrap_or(',');
    let fields: Vec<&str> = line.splitn(3, delimiter).collect();
    if fields.len() < 3 {
        return Err(parse_error(
            format!("expected score, confidence and explanation; found {} field(s)", fields.len()),
            raw,
        ));
    }
    Ok(AnalysisResult {
        score: parse_unit(fields[0], "score", raw)?,
        confidence: parse_unit(fields[1], "confidence", raw)?,
        explanation: unquote(fields[2]).to_string(),
    })
}

fn normalized_header(line: &str) -> String {
    line.chars()
        .filter(|c| !c.is_whitespace() && *c != '"')
        .collect::<String>()
        .to_lowercase()
}

/// Parses one generated review (header plus row, or a bare row) in the
/// standard column order. Prose around the CSV is an error.
pub fn parse_generation_response(raw: &str) -> Result<Review, GatewayError> {
    let body = strip_fences(raw);
    let canonical = HEADER_COLUMNS.join("|");
    let mut lines = body.lines().filter(|l| !l.trim().is_empty()).peekable();

    let mut csv = String::new();
    match lines.peek() {
        Some(first) if normalized_header(first).starts_with("orig_sentiment") => {
            csv.push_str(first);
            lines.next();
        }
        Some(_) => csv.push_str(&canonical),
        None => return Err(parse_error("empty response", raw)),
    }
    let header = normalized_header(&csv);
    for line in lines {
        if normalized_header(line) == header {
            continue;
        }
        csv.push('\n');
        csv.push_str(line);
    }
    csv.push('\n');

    let mut reviews = parse_reviews(csv.as_bytes(), Source::Synthetic)
        .map_err(|e| parse_error(e.to_string(), raw))?;
    match reviews.len() {
        1 => Ok(reviews.remove(0)),
        n => Err(parse_error(format!("expected one review, found {n}"), raw)),
    }
}
