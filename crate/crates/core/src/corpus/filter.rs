use super::{CorpusError, Review};

/// Insider-threat keyword stems matched as case-insensitive substrings.
pub const DEFAULT_STEMS: [&str; 11] = [
    "hate", "toxic", "caught", "steal", "corrupt", "collu", "stole", "delet", "pay", "paid",
    "fraud",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFilter {
    stems: Vec<String>,
}

impl KeywordFilter {
    pub fn new<I, S>(stems: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let stems: Vec<String> = stems.into_iter().map(Into::into).collect();
        if stems.is_empty() {
            return Err(CorpusError::Domain("keyword filter needs at least one stem".into()));
        }
        for stem in &stems {
            if stem.is_empty() || *stem != stem.to_lowercase() {
                return Err(CorpusError::Domain(format!(
                    "stem {stem:?} must be non-empty and lowercase"
                )));
            }
        }
        Ok(Self { stems })
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn matches(&self, review: &Review) -> bool {
        [&review.pros, &review.cons, &review.job_title]
            .iter()
            .map(|field| field.to_lowercase())
            .any(|field| self.stems.iter().any(|stem| field.contains(stem.as_str())))
    }
}

impl Default for KeywordFilter {
    fn default() -> Self {
        Self {
            stems: DEFAULT_STEMS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Keeps reviews where any stem occurs in pros, cons or job title.
pub fn filter_by_keywords(reviews: &[Review], filter: &KeywordFilter) -> Vec<Review> {
    reviews.iter().filter(|r| filter.matches(r)).cloned().collect()
}
