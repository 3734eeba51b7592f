use serde::{Deserialize, Serialize};

use super::rng::{below, seeded};
use super::{CorpusError, Review};

/// Inputs to Cochran's sample-size formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub population: u64,
    pub confidence_z: f64,
    pub proportion: f64,
    pub margin: f64,
    pub seed: u64,
}

impl SamplePlan {
    /// 95% confidence, p = 0.5, 5% margin.
    pub fn standard(population: u64, seed: u64) -> Self {
        Self {
            population,
            confidence_z: 1.96,
            proportion: 0.5,
            margin: 0.05,
            seed,
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.population == 0 {
            return Err(CorpusError::Domain("population size must be positive".into()));
        }
        if !(self.confidence_z > 0.0 && self.confidence_z.is_finite()) {
            return Err(CorpusError::Domain("z must be positive".into()));
        }
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(CorpusError::Domain("proportion must lie in (0, 1)".into()));
        }
        // A margin of exactly 1 is degenerate but still yields the one-record floor.
        if !(self.margin > 0.0 && self.margin <= 1.0) {
            return Err(CorpusError::Domain("margin must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CochranEstimate {
    /// Infinite-population size z²p(1−p)/e².
    pub initial: f64,
    /// After finite-population correction.
    pub corrected: f64,
    pub sample_size: u64,
}

pub fn cochran_estimate(plan: &SamplePlan) -> Result<CochranEstimate, CorpusError> {
    plan.validate()?;
    let p = plan.proportion;
    let initial = plan.confidence_z.powi(2) * p * (1.0 - p) / plan.margin.powi(2);
    let corrected = initial / (1.0 + (initial - 1.0) / plan.population as f64);
    let sample_size = (corrected.ceil() as u64).clamp(1, plan.population);
    Ok(CochranEstimate {
        initial,
        corrected,
        sample_size,
    })
}

pub fn cochran_sample_size(plan: &SamplePlan) -> Result<u64, CorpusError> {
    cochran_estimate(plan).map(|e| e.sample_size)
}

/// In-place Fisher–Yates shuffle driven by the pinned generator.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = seeded(seed);
    for i in (1..items.len()).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Shuffles a copy of `reviews` and keeps the first `k`.
pub fn random_sample(reviews: &[Review], k: usize, seed: u64) -> Result<Vec<Review>, CorpusError> {
    if k == 0 {
        return Err(CorpusError::Domain("sample size must be positive".into()));
    }
    if k > reviews.len() {
        return Err(CorpusError::Domain(format!(
            "sample size {k} exceeds population {}",
            reviews.len()
        )));
    }
    let mut pool = reviews.to_vec();
    shuffle(&mut pool, seed);
    pool.truncate(k);
    Ok(pool)
}
