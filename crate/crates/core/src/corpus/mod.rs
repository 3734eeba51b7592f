//! Review datasets: the pipe-delimited file format, keyword filtering and
//! reproducible sampling.

mod filter;
mod format;
mod review;
pub mod rng;
mod sampling;

pub use filter::{filter_by_keywords, KeywordFilter, DEFAULT_STEMS};
pub use format::{parse_reviews, parse_reviews_with, write_reviews, ParseOptions, HEADER_COLUMNS};
pub use review::{EmpStatus, Review, ReviewId, Source};
pub use sampling::{cochran_estimate, cochran_sample_size, random_sample, shuffle, CochranEstimate, SamplePlan};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed header: missing columns {missing:?}")]
    MissingColumns { missing: Vec<String> },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
