//! Insider-threat sentiment pipeline.
//!
//! The crate covers every batch stage of the workflow:
//!
//! - [`corpus`]: pipe-delimited review files, keyword filtering, Cochran
//!   sample sizing and seeded sampling.
//! - [`rubric`]: the five expert threat bands and crossover scores.
//! - [`gateway`]: prompt rendering, chat-completion providers (HTTP and an
//!   offline mock) and response parsing.
//! - [`synthesis`]: scheduled generation of synthetic reviews.
//! - [`diversity`]: CR, CR-POS and NDS text-diversity metrics.
//! - [`alignment`]: MAD, MSD, max difference and disagreement listings.
//! - [`annotation`]: blind gold-standard scoring sessions and their HTTP API.

pub mod alignment;
pub mod annotation;
pub mod corpus;
pub mod diversity;
pub mod gateway;
pub mod rubric;
pub mod synthesis;

pub use corpus::{EmpStatus, Review, ReviewId, Source};
