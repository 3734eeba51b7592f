//! Agreement statistics between reference scores (gold standard or
//! generation target) and evaluated scores (LLM output).

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ReviewId;
use crate::diversity::csv_label;

/// Threshold used when a caller does not choose one.
pub const DEFAULT_DISAGREEMENT_THRESHOLD: f64 = 0.5;

/// Slack for comparing differences of two-decimal scores against a threshold.
const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("no score pairs")]
    Empty,
    #[error("score {value} for review {review_id} is outside [0, 1]")]
    OutOfRange { review_id: ReviewId, value: f64 },
    #[error("threshold {0} must lie in (0, 1]")]
    Threshold(f64),
    #[error("join failed: ids missing from scores {missing_scores:?}, missing from reference {missing_reference:?}")]
    Join {
        missing_scores: Vec<ReviewId>,
        missing_reference: Vec<ReviewId>,
    },
    #[error("duplicate review id {0} in {1}")]
    Duplicate(ReviewId, &'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub review_id: ReviewId,
    pub reference: f64,
    pub evaluated: f64,
}

impl ScorePair {
    pub fn new(review_id: ReviewId, reference: f64, evaluated: f64) -> Result<Self, AlignmentError> {
        for value in [reference, evaluated] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AlignmentError::OutOfRange { review_id, value });
            }
        }
        Ok(Self {
            review_id,
            reference,
            evaluated,
        })
    }

    pub fn abs_diff(&self) -> f64 {
        (self.evaluated - self.reference).abs()
    }
}

fn non_empty(pairs: &[ScorePair]) -> Result<(), AlignmentError> {
    if pairs.is_empty() {
        Err(AlignmentError::Empty)
    } else {
        Ok(())
    }
}

pub fn mean_absolute_difference(pairs: &[ScorePair]) -> Result<f64, AlignmentError> {
    non_empty(pairs)?;
    Ok(pairs.iter().map(ScorePair::abs_diff).sum::<f64>() / pairs.len() as f64)
}

pub fn mean_squared_difference(pairs: &[ScorePair]) -> Result<f64, AlignmentError> {
    non_empty(pairs)?;
    Ok(pairs.iter().map(|p| p.abs_diff().powi(2)).sum::<f64>() / pairs.len() as f64)
}

pub fn max_difference(pairs: &[ScorePair]) -> Result<f64, AlignmentError> {
    non_empty(pairs)?;
    Ok(pairs.iter().map(ScorePair::abs_diff).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub review_id: ReviewId,
    pub difference: f64,
}

/// Pairs whose absolute difference reaches `threshold`, largest first, ties
/// by ascending id.
pub fn disagreement_report(
    pairs: &[ScorePair],
    threshold: f64,
) -> Result<Vec<Disagreement>, AlignmentError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AlignmentError::Threshold(threshold));
    }
    let mut out: Vec<Disagreement> = pairs
        .iter()
        .filter(|p| p.abs_diff() >= threshold - THRESHOLD_SLACK)
        .map(|p| Disagreement {
            review_id: p.review_id,
            difference: p.abs_diff(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.difference
            .total_cmp(&a.difference)
            .then(a.review_id.cmp(&b.review_id))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub mad: f64,
    pub msd: f64,
    pub max_diff: f64,
    pub count: usize,
    pub threshold: f64,
    pub disagreements: Vec<Disagreement>,
}

pub fn alignment_report(pairs: &[ScorePair], threshold: f64) -> Result<AlignmentReport, AlignmentError> {
    Ok(AlignmentReport {
        mad: mean_absolute_difference(pairs)?,
        msd: mean_squared_difference(pairs)?,
        max_diff: max_difference(pairs)?,
        count: pairs.len(),
        threshold,
        disagreements: disagreement_report(pairs, threshold)?,
    })
}

impl AlignmentReport {
    pub const CSV_HEADER: &'static str = "Model,MAD,MSD,Max Diff";

    /// Share of pairs listed as disagreements.
    pub fn disagreement_rate(&self) -> f64 {
        self.disagreements.len() as f64 / self.count as f64
    }

    pub fn csv_row(&self, model: &str) -> String {
        format!(
            "{},{:.3},{:.3},{:.3}",
            csv_label(model),
            self.mad,
            self.msd,
            self.max_diff
        )
    }

    pub fn render_csv(&self, model: &str) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row(model))
    }

    pub fn render_disagreements(&self) -> String {
        let mut out = String::from("review_id,difference\n");
        for d in &self.disagreements {
            out.push_str(&format!("{},{:.3}\n", d.review_id, d.difference));
        }
        out
    }
}

/// One line of a score file; extra fields (confidence, explanation,
/// is_crossover) are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub review_id: ReviewId,
    pub score: f64,
}

/// Reads JSONL score lines, skipping blanks and `#` metadata lines.
pub fn read_score_entries<R: BufRead>(input: R) -> Result<Vec<ScoreEntry>, AlignmentError> {
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| AlignmentError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let entry: ScoreEntry = serde_json::from_str(trimmed).map_err(|e| AlignmentError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Joins reference and evaluated scores on review id. Every id must appear
/// exactly once on each side. Output is in ascending id order.
pub fn join_scores(
    reference: &[ScoreEntry],
    evaluated: &[ScoreEntry],
) -> Result<Vec<ScorePair>, AlignmentError> {
    let index = |entries: &[ScoreEntry], side: &'static str| {
        let mut map = BTreeMap::new();
        for e in entries {
            if map.insert(e.review_id, e.score).is_some() {
                return Err(AlignmentError::Duplicate(e.review_id, side));
            }
        }
        Ok(map)
    };
    let refs = index(reference, "reference")?;
    let evals = index(evaluated, "scores")?;
    let missing_scores: Vec<ReviewId> = refs.keys().filter(|k| !evals.contains_key(k)).copied().collect();
    let missing_reference: Vec<ReviewId> = evals.keys().filter(|k| !refs.contains_key(k)).copied().collect();
    if !missing_scores.is_empty() || !missing_reference.is_empty() {
        return Err(AlignmentError::Join {
            missing_scores,
            missing_reference,
        });
    }
    refs.iter()
        .map(|(id, r)| ScorePair::new(*id, *r, evals[id]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(values: &[(f64, f64)]) -> Vec<ScorePair> {
        values
            .iter()
            .enumerate()
            .map(|(i, (r, e))| ScorePair::new(ReviewId(i as u64 + 1), *r, *e).unwrap())
            .collect()
    }

    #[test]
    fn reference_arithmetic() {
        let p = pairs(&[(0.9, 0.15), (0.8, 0.35)]);
        assert!((mean_absolute_difference(&p).unwrap() - 0.60).abs() < 1e-12);
        assert_eq!(mean_squared_difference(&pairs(&[(0.0, 1.0)])).unwrap(), 1.0);
        let p = pairs(&[(0.5, 0.5), (0.2, 0.4)]);
        assert!((mean_squared_difference(&p).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn identical_vectors_are_zero() {
        let p = pairs(&[(0.3, 0.3)]);
        let report = alignment_report(&p, 0.5).unwrap();
        assert_eq!((report.mad, report.msd, report.max_diff), (0.0, 0.0, 0.0));
        assert!(report.disagreements.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(mean_absolute_difference(&[]), Err(AlignmentError::Empty));
        assert_eq!(mean_squared_difference(&[]), Err(AlignmentError::Empty));
        assert_eq!(max_difference(&[]), Err(AlignmentError::Empty));
    }

    #[test]
    fn disagreements_sorted_and_filtered() {
        let p = vec![
            ScorePair::new(ReviewId(10), 0.9, 0.1).unwrap(),
            ScorePair::new(ReviewId(11), 0.6, 0.4).unwrap(),
        ];
        let d = disagreement_report(&p, 0.5).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].review_id, ReviewId(10));
        assert!((d[0].difference - 0.8).abs() < 1e-12);

        let ties = vec![
            ScorePair::new(ReviewId(3), 0.0, 0.75).unwrap(),
            ScorePair::new(ReviewId(1), 0.75, 0.0).unwrap(),
            ScorePair::new(ReviewId(2), 0.8, 0.3).unwrap(),
        ];
        let ids: Vec<u64> = disagreement_report(&ties, 0.5).unwrap().iter().map(|d| d.review_id.0).collect();
        assert_eq!(ids, vec![1, 3, 2]);

        assert!(disagreement_report(&pairs(&[(0.01, 0.99), (0.5, 0.2)]), 1.0).unwrap().is_empty());
        assert!(disagreement_report(&p, 0.0).is_err());
    }

    #[test]
    fn csv_rendering() {
        let report = alignment_report(&pairs(&[(0.9, 0.15), (0.8, 0.35)]), 0.5).unwrap();
        assert_eq!(report.render_csv("GPT-4o"), "Model,MAD,MSD,Max Diff\nGPT-4o,0.600,0.383,0.750\n");
        assert_eq!(report.render_disagreements(), "review_id,difference\n1,0.750\n");
    }

    #[test]
    fn out_of_range_pairs_rejected() {
        assert!(ScorePair::new(ReviewId(1), 1.2, 0.0).is_err());
        assert!(ScorePair::new(ReviewId(1), 0.2, f64::NAN).is_err());
    }

    #[test]
    fn jsonl_join() {
        let gold = "# tool=threatsent\n{\"review_id\":2,\"score\":0.35,\"is_crossover\":false}\n\n{\"review_id\":1,\"score\":0.7,\"is_crossover\":false}\n";
        let llm = "{\"review_id\":1,\"score\":0.6,\"confidence\":0.9,\"explanation\":\"x\"}\n{\"review_id\":2,\"score\":0.4,\"confidence\":0.8,\"explanation\":\"y\"}\n";
        let g = read_score_entries(gold.as_bytes()).unwrap();
        let s = read_score_entries(llm.as_bytes()).unwrap();
        let joined = join_scores(&g, &s).unwrap();
        assert_eq!(joined[0], ScorePair::new(ReviewId(1), 0.7, 0.6).unwrap());
        assert_eq!(joined.len(), 2);

        let err = join_scores(&g, &s[..1]).unwrap_err();
        assert_eq!(
            err,
            AlignmentError::Join { missing_scores: vec![ReviewId(2)], missing_reference: vec![] }
        );
        assert!(matches!(join_scores(&[g[0], g[0]], &s), Err(AlignmentError::Duplicate(..))));
        assert!(matches!(read_score_entries("{oops".as_bytes()), Err(AlignmentError::Parse { line: 1, .. })));
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<ScorePair>> {
        proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..200).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (r, e))| ScorePair::new(ReviewId(i as u64), r, e).unwrap())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn statistics_are_permutation_invariant(p in arb_pairs(), seed in any::<u64>()) {
            let mut shuffled = p.clone();
            crate::corpus::shuffle(&mut shuffled, seed);
            let a = alignment_report(&p, 0.5).unwrap();
            let b = alignment_report(&shuffled, 0.5).unwrap();
            prop_assert!((a.mad - b.mad).abs() < 1e-12);
            prop_assert!((a.msd - b.msd).abs() < 1e-12);
            prop_assert_eq!(a.max_diff, b.max_diff);
            prop_assert_eq!(a.disagreements, b.disagreements);
        }

        #[test]
        fn disagreements_nest(p in arb_pairs(), t1 in 0.01f64..=1.0, t2 in 0.01f64..=1.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let wide = disagreement_report(&p, lo).unwrap();
            let narrow = disagreement_report(&p, hi).unwrap();
            prop_assert!(narrow.iter().all(|d| wide.contains(d)));
        }
    }
}
