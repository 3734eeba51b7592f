//! Text-diversity metrics: compression ratio over raw bytes (CR), over the
//! part-of-speech tag stream (CR-POS), and the n-gram diversity score (NDS).
//!
//! Higher CR / CR-POS means more repetition; higher NDS means more variety.

mod pos;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::ops::Deref;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Review;

pub use pos::{lexicon_size, pos_tag, tag_token, PosTag};

/// Largest n-gram order summed into NDS.
pub const NDS_MAX_ORDER: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum DiversityError {
    #[error("compression ratio of empty input is undefined")]
    EmptyText,
    #[error("need at least {needed} tokens, got {got}")]
    TooFewTokens { needed: usize, got: usize },
    #[error("corpus has no review text")]
    EmptyCorpus,
}

/// Lowercase word tokens; never empty, never containing whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<S: AsRef<str>> FromIterator<S> for TokenSequence {
    /// Collects already-split words, lowercasing them and dropping empties.
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence(
            iter.into_iter()
                .flat_map(|w| tokenize(w.as_ref()).0)
                .collect(),
        )
    }
}

/// Lowercases, then keeps maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
    )
}

/// `|text| / |deflate(text)|` with raw deflate at level 9.
pub fn compression_ratio(text: &[u8]) -> Result<f64, DiversityError> {
    if text.is_empty() {
        return Err(DiversityError::EmptyText);
    }
    let mut encoder = DeflateEncoder::new(Vec::new(), Compression::best());
    encoder.write_all(text).expect("writing to a Vec cannot fail");
    let compressed = encoder.finish().expect("writing to a Vec cannot fail");
    Ok(text.len() as f64 / compressed.len() as f64)
}

pub fn compression_ratio_pos(tokens: &TokenSequence) -> Result<f64, DiversityError> {
    if tokens.is_empty() {
        return Err(DiversityError::TooFewTokens { needed: 1, got: 0 });
    }
    let serialized = pos_tag(tokens)
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    compression_ratio(serialized.as_bytes())
}

/// Sum over n = 1..=4 of distinct n-grams / total n-grams (contiguous).
pub fn ngram_diversity_score(tokens: &TokenSequence) -> Result<f64, DiversityError> {
    if tokens.len() < NDS_MAX_ORDER {
        return Err(DiversityError::TooFewTokens {
            needed: NDS_MAX_ORDER,
            got: tokens.len(),
        });
    }
    let mut vocab: HashMap<&str, u32> = HashMap::new();
    let ids: Vec<u32> = tokens
        .iter()
        .map(|t| {
            let next = vocab.len() as u32;
            *vocab.entry(t.as_str()).or_insert(next)
        })
        .collect();

    // Summed exactly, then rounded once, so anchors like 25/12 come out exact.
    let mut score = Ratio::<u128>::from_integer(0);
    for n in 1..=NDS_MAX_ORDER {
        let distinct: HashSet<&[u32]> = ids.windows(n).collect();
        let total = ids.len() - n + 1;
        score += Ratio::new(distinct.len() as u128, total as u128);
    }
    Ok(score.to_f64().expect("finite ratio"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub cr: f64,
    pub cr_pos: f64,
    pub nds: f64,
    pub token_count: usize,
    pub corpus_bytes: usize,
}

impl DiversityReport {
    pub const CSV_HEADER: &'static str = "Dataset,CR,CR-POS,NDS,token_count,corpus_bytes";

    pub fn csv_row(&self, dataset: &str) -> String {
        format!(
            "{},{:.3},{:.3},{:.3},{},{}",
            csv_label(dataset),
            self.cr,
            self.cr_pos,
            self.nds,
            self.token_count,
            self.corpus_bytes
        )
    }
}

/// Quotes a label if it would break a comma-separated row.
pub(crate) fn csv_label(label: &str) -> String {
    if label.contains([',', '"', '\n']) {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

/// Joins pros then cons of every review, in id order, one field per line.
/// Empty fields are skipped.
pub fn corpus_text(reviews: &[Review]) -> String {
    let mut ordered: Vec<&Review> = reviews.iter().collect();
    ordered.sort_by_key(|r| r.id);
    ordered
        .iter()
        .flat_map(|r| [r.pros.as_str(), r.cons.as_str()])
        .filter(|f| !f.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn diversity_report(reviews: &[Review]) -> Result<DiversityReport, DiversityError> {
    let text = corpus_text(reviews);
    if text.is_empty() {
        return Err(DiversityError::EmptyCorpus);
    }
    let tokens = tokenize(&text);
    Ok(DiversityReport {
        cr: compression_ratio(text.as_bytes())?,
        cr_pos: compression_ratio_pos(&tokens)?,
        nds: ngram_diversity_score(&tokens)?,
        token_count: tokens.len(),
        corpus_bytes: text.len(),
    })
}
