//! Expert threat bands over the `[0, 1]` sentiment scale.
//!
//! | score      | level    |
//! |------------|----------|
//! | [0.0, 0.2) | Critical |
//! | (0.2, 0.4) | High     |
//! | (0.4, 0.6) | Medium   |
//! | (0.6, 0.8) | Low      |
//! | (0.8, 1.0] | Nominal  |
//!
//! The four shared endpoints are crossover scores: they report the band below
//! as `level` and the band above as `crossover_with`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boundary matching tolerance.
pub const CROSSOVER_TOLERANCE: f64 = 1e-9;

pub const BOUNDARIES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Error, PartialEq)]
#[error("invalid score: {0}")]
pub struct ScoreError(pub String);

/// Ordered from most to least severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ThreatLevel {
    Critical,
    High,
    Medium,
    Low,
    Nominal,
}

impl ThreatLevel {
    pub const ALL: [ThreatLevel; 5] = [
        ThreatLevel::Critical,
        ThreatLevel::High,
        ThreatLevel::Medium,
        ThreatLevel::Low,
        ThreatLevel::Nominal,
    ];

    fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            ThreatLevel::Critical => "Critical",
            ThreatLevel::High => "High",
            ThreatLevel::Medium => "Medium",
            ThreatLevel::Low => "Low",
            ThreatLevel::Nominal => "Nominal",
        }
    }
}

impl fmt::Display for ThreatLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RubricResult {
    pub score: f64,
    pub level: ThreatLevel,
    pub crossover_with: Option<ThreatLevel>,
}

impl RubricResult {
    pub fn is_crossover(&self) -> bool {
        self.crossover_with.is_some()
    }
}

/// Index of the boundary `score` sits on, if any.
pub fn boundary_index(score: f64) -> Option<usize> {
    BOUNDARIES
        .iter()
        .position(|b| (score - b).abs() <= CROSSOVER_TOLERANCE)
}

pub fn classify_score(score: f64) -> Result<RubricResult, ScoreError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(ScoreError(format!("{score} is outside [0, 1]")));
    }
    if let Some(i) = boundary_index(score) {
        return Ok(RubricResult {
            score,
            level: ThreatLevel::from_index(i),
            crossover_with: Some(ThreatLevel::from_index(i + 1)),
        });
    }
    let band = BOUNDARIES.iter().filter(|&&b| score > b).count();
    Ok(RubricResult {
        score,
        level: ThreatLevel::from_index(band),
        crossover_with: None,
    })
}

/// Rounds to two decimals (half away from zero) and checks the range.
pub fn validate_score(raw: f64) -> Result<f64, ScoreError> {
    if raw.is_nan() {
        return Err(ScoreError("NaN".into()));
    }
    let rounded = (raw * 100.0).round() / 100.0;
    if !(0.0..=1.0).contains(&rounded) {
        return Err(ScoreError(format!("{raw} is outside [0, 1]")));
    }
    // Normalise -0.0.
    Ok(rounded + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn band_anchors() {
        let expect = [
            (0.1, ThreatLevel::Critical),
            (0.3, ThreatLevel::High),
            (0.5, ThreatLevel::Medium),
            (0.7, ThreatLevel::Low),
            (0.9, ThreatLevel::Nominal),
            (0.0, ThreatLevel::Critical),
            (1.0, ThreatLevel::Nominal),
        ];
        for (score, level) in expect {
            let r = classify_score(score).unwrap();
            assert_eq!(r.level, level, "{score}");
            assert_eq!(r.crossover_with, None);
        }
    }

    #[test]
    fn crossovers() {
        let r = classify_score(0.4).unwrap();
        assert_eq!(r.level, ThreatLevel::High);
        assert_eq!(r.crossover_with, Some(ThreatLevel::Medium));
        for (i, b) in BOUNDARIES.iter().enumerate() {
            let r = classify_score(*b).unwrap();
            assert_eq!(r.level, ThreatLevel::ALL[i]);
            assert_eq!(r.crossover_with, Some(ThreatLevel::ALL[i + 1]));
        }
        // float arithmetic landing next to a boundary still counts
        assert!(classify_score(0.1 + 0.1 + 0.1 + 0.1).unwrap().is_crossover());
        assert!(!classify_score(0.41).unwrap().is_crossover());
    }

    #[test]
    fn out_of_range() {
        assert!(classify_score(-0.01).is_err());
        assert!(classify_score(1.01).is_err());
        assert!(classify_score(f64::NAN).is_err());
    }

    #[test]
    fn validation_rounds() {
        assert_eq!(validate_score(0.847), Ok(0.85));
        assert_eq!(validate_score(1.0), Ok(1.0));
        assert_eq!(validate_score(0.125), Ok(0.13));
        assert!(validate_score(-0.2).is_err());
        assert!(validate_score(1.2).is_err());
        assert!(validate_score(f64::NAN).is_err());
        assert!(validate_score(f64::INFINITY).is_err());
        assert_eq!(validate_score(-0.001).map(f64::to_bits), Ok(0.0f64.to_bits()));
    }

    proptest! {
        #[test]
        fn monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_score(lo).unwrap().level <= classify_score(hi).unwrap().level);
        }

        #[test]
        fn crossover_only_on_boundaries(s in 0.0f64..=1.0) {
            let r = classify_score(s).unwrap();
            prop_assert_eq!(r.is_crossover(), boundary_index(s).is_some());
        }
    }
}
