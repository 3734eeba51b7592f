//! Blind gold-standard scoring sessions.
//!
//! A session holds a shuffled queue of reviews stripped down to the fields an
//! annotator may see. Scores must be entered in queue order; re-scoring an
//! earlier item appends a revision and the latest record wins on export.
//! Every change is an event in an append-only JSONL file per session, so a
//! restarted service replays exactly the acknowledged history.

mod server;
mod store;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{shuffle, Review, ReviewId};
use crate::rubric::{boundary_index, validate_score};

pub use server::{router, serve, AnnotationService};
pub use store::SessionStore;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{0}")]
    Domain(String),
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("expected a score for review {expected:?}, got review {got}")]
    Sequencing { expected: Option<ReviewId>, got: ReviewId },
    #[error("session incomplete; unscored review ids: {}", join_ids(.remaining))]
    Incomplete { remaining: Vec<ReviewId> },
    #[error("session log {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn join_ids(ids: &[ReviewId]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

/// What the annotator is shown: no sentiment, score or provenance fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindItem {
    pub review_id: ReviewId,
    pub pros: String,
    pub cons: String,
    pub job_title: String,
    pub emp_status: String,
}

impl From<&Review> for BlindItem {
    fn from(r: &Review) -> Self {
        Self {
            review_id: r.id,
            pros: r.pros.clone(),
            cons: r.cons.clone(),
            job_title: r.job_title.clone(),
            emp_status: r.emp_status.label().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub session_id: String,
    pub review_id: ReviewId,
    pub score: f64,
    pub is_crossover: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub recorded_at: DateTime<Utc>,
    /// True when the record supersedes an earlier score for the same review.
    pub revision: bool,
}

/// A line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        seed: u64,
        created_at: DateTime<Utc>,
        /// Queue order.
        items: Vec<BlindItem>,
    },
    Scored(AnnotationRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub scored: usize,
    pub total: usize,
    pub revisions: usize,
}

/// An item together with its 1-based queue position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuedItem {
    #[serde(flatten)]
    pub item: BlindItem,
    pub position: usize,
    pub total: usize,
}

/// One line of a gold score export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub review_id: ReviewId,
    pub score: f64,
    pub is_crossover: bool,
}

#[derive(Debug, Clone)]
pub struct AnnotationSession {
    session_id: String,
    seed: u64,
    created_at: DateTime<Utc>,
    items: Vec<BlindItem>,
    cursor: usize,
    records: Vec<AnnotationRecord>,
    latest: BTreeMap<ReviewId, usize>,
}

impl AnnotationSession {
    /// The creation event for a new session over `reviews`, queued in seeded
    /// shuffle order.
    pub fn plan(
        reviews: &[Review],
        seed: u64,
        session_id: String,
        created_at: DateTime<Utc>,
    ) -> Result<SessionEvent, AnnotationError> {
        if reviews.is_empty() {
            return Err(AnnotationError::Domain("cannot annotate an empty corpus".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = reviews.iter().find(|r| !seen.insert(r.id)) {
            return Err(AnnotationError::Domain(format!("duplicate review id {}", dup.id)));
        }
        let mut items: Vec<BlindItem> = reviews.iter().map(BlindItem::from).collect();
        shuffle(&mut items, seed);
        Ok(SessionEvent::Created {
            session_id,
            seed,
            created_at,
            items,
        })
    }

    /// Rebuilds a session from its log.
    pub fn replay(events: &[SessionEvent]) -> Result<Self, AnnotationError> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| AnnotationError::Domain("empty session log".into()))?;
        let SessionEvent::Created {
            session_id,
            seed,
            created_at,
            items,
        } = first.clone()
        else {
            return Err(AnnotationError::Domain("session log must start with a creation event".into()));
        };
        let mut session = Self {
            session_id,
            seed,
            created_at,
            items,
            cursor: 0,
            records: Vec::new(),
            latest: BTreeMap::new(),
        };
        for event in rest {
            match event {
                SessionEvent::Scored(record) => {
                    // Re-validate so a hand-edited log cannot smuggle in bad state.
                    let checked = session.check(record.review_id, record.score, record.is_crossover)?;
                    if checked != record.revision {
                        return Err(AnnotationError::Domain(format!(
                            "revision flag mismatch for review {}",
                            record.review_id
                        )));
                    }
                    session.apply(record.clone());
                }
                SessionEvent::Created { .. } => {
                    return Err(AnnotationError::Domain("duplicate creation event".into()))
                }
            }
        }
        Ok(session)
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn review_ids(&self) -> Vec<ReviewId> {
        self.items.iter().map(|i| i.review_id).collect()
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn is_complete(&self) -> bool {
        self.cursor == self.items.len()
    }

    pub fn next_item(&self) -> Option<QueuedItem> {
        self.items.get(self.cursor).map(|item| QueuedItem {
            item: item.clone(),
            position: self.cursor + 1,
            total: self.items.len(),
        })
    }

    pub fn progress(&self) -> Progress {
        Progress {
            scored: self.cursor,
            total: self.items.len(),
            revisions: self.records.iter().filter(|r| r.revision).count(),
        }
    }

    /// Validates a submission; returns whether it would be a revision.
    fn check(&self, review_id: ReviewId, score: f64, is_crossover: bool) -> Result<bool, AnnotationError> {
        let score = validate_score(score).map_err(|e| AnnotationError::Domain(e.to_string()))?;
        if is_crossover && boundary_index(score).is_none() {
            return Err(AnnotationError::Domain(format!(
                "score {score} is not a band boundary and cannot be a crossover"
            )));
        }
        if self.latest.contains_key(&review_id) {
            return Ok(true);
        }
        let expected = self.items.get(self.cursor).map(|i| i.review_id);
        if expected == Some(review_id) {
            Ok(false)
        } else {
            Err(AnnotationError::Sequencing {
                expected,
                got: review_id,
            })
        }
    }

    /// Builds the record a submission would append, without changing state.
    pub fn prepare_score(
        &self,
        review_id: ReviewId,
        score: f64,
        is_crossover: bool,
        note: Option<String>,
        recorded_at: DateTime<Utc>,
    ) -> Result<AnnotationRecord, AnnotationError> {
        let revision = self.check(review_id, score, is_crossover)?;
        Ok(AnnotationRecord {
            session_id: self.session_id.clone(),
            review_id,
            score: validate_score(score).expect("checked above"),
            is_crossover,
            note: note.filter(|n| !n.trim().is_empty()),
            recorded_at,
            revision,
        })
    }

    /// Applies a record produced by [`prepare_score`](Self::prepare_score)
    /// once it is durable.
    pub fn apply(&mut self, record: AnnotationRecord) {
        if !record.revision {
            self.cursor += 1;
        }
        self.latest.insert(record.review_id, self.records.len());
        self.records.push(record);
    }

    /// Latest score per review, ordered by review id.
    pub fn export_gold(&self, partial: bool) -> Result<Vec<GoldEntry>, AnnotationError> {
        if !partial && !self.is_complete() {
            let mut remaining: Vec<ReviewId> = self.items[self.cursor..].iter().map(|i| i.review_id).collect();
            remaining.sort();
            return Err(AnnotationError::Incomplete { remaining });
        }
        Ok(self
            .latest
            .values()
            .map(|&i| {
                let r = &self.records[i];
                GoldEntry {
                    review_id: r.review_id,
                    score: r.score,
                    is_crossover: r.is_crossover,
                }
            })
            .collect())
    }
}

/// Renders gold entries as JSONL.
pub fn render_gold(entries: &[GoldEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("gold entries serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EmpStatus, Source};
    use chrono::{NaiveDate, TimeZone};

    pub(crate) fn reviews(n: u64) -> Vec<Review> {
        (1..=n)
            .map(|i| Review {
                id: ReviewId(i),
                orig_sentiment: Some((i % 11) as f64 / 10.0),
                date_of_review: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
                emp_status: EmpStatus::CurrentEmployee,
                job_title: format!("Title {i}"),
                pros: format!("pros {i}"),
                cons: format!("cons {i}"),
                source: Source::Synthetic,
                extras: Default::default(),
            })
            .collect()
    }

    fn at() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap()
    }

    fn session(n: u64, seed: u64) -> AnnotationSession {
        let created = AnnotationSession::plan(&reviews(n), seed, "s".into(), at()).unwrap();
        AnnotationSession::replay(&[created]).unwrap()
    }

    fn score(s: &mut AnnotationSession, id: ReviewId, value: f64) -> Result<AnnotationRecord, AnnotationError> {
        let r = s.prepare_score(id, value, false, None, at())?;
        s.apply(r.clone());
        Ok(r)
    }

    #[test]
    fn construction_is_seeded() {
        let a = session(385, 9);
        assert_eq!(a.review_ids().len(), 385);
        assert_eq!(a.cursor(), 0);
        assert_eq!(a.review_ids(), session(385, 9).review_ids());
        assert_ne!(a.review_ids(), session(385, 10).review_ids());
        let mut sorted = a.review_ids();
        sorted.sort();
        assert_eq!(sorted, (1..=385).map(ReviewId).collect::<Vec<_>>());
        assert!(AnnotationSession::plan(&[], 1, "x".into(), at()).is_err());
    }

    #[test]
    fn served_items_are_blind() {
        let s = session(20, 3);
        let json = serde_json::to_string(&s.next_item().unwrap()).unwrap();
        for banned in ["orig_sentiment", "score", "source", "confidence", "Synthetic"] {
            assert!(!json.contains(banned), "{json}");
        }
    }

    #[test]
    fn scoring_in_order_with_revisions() {
        let mut s = session(3, 1);
        let ids = s.review_ids();
        assert!(matches!(
            score(&mut s, ids[1], 0.5),
            Err(AnnotationError::Sequencing { .. })
        ));
        assert!(matches!(score(&mut s, ids[0], 1.3), Err(AnnotationError::Domain(_))));
        assert!(s.prepare_score(ids[0], 0.47, true, None, at()).is_err());

        let r = score(&mut s, ids[0], 0.0).unwrap();
        assert!(!r.revision);
        assert_eq!(s.cursor(), 1);
        let r = s.prepare_score(ids[1], 0.4, true, Some("  ".into()), at()).unwrap();
        assert_eq!(r.note, None);
        s.apply(r);

        assert!(matches!(s.export_gold(false), Err(AnnotationError::Incomplete { remaining }) if remaining == vec![ids[2]]));

        let r = score(&mut s, ids[0], 0.85).unwrap();
        assert!(r.revision);
        assert_eq!(s.cursor(), 2);
        score(&mut s, ids[2], 0.47).unwrap();
        assert!(s.next_item().is_none());

        let gold = s.export_gold(false).unwrap();
        assert_eq!(gold.len(), 3);
        assert!(gold.windows(2).all(|w| w[0].review_id < w[1].review_id));
        let first = gold.iter().find(|g| g.review_id == ids[0]).unwrap();
        assert_eq!(first.score, 0.85);
        assert_eq!(s.progress(), Progress { scored: 3, total: 3, revisions: 1 });
    }

    #[test]
    fn replay_reproduces_export() {
        let created = AnnotationSession::plan(&reviews(5), 2, "s".into(), at()).unwrap();
        let mut s = AnnotationSession::replay(std::slice::from_ref(&created)).unwrap();
        let mut events = vec![created];
        for (i, id) in s.review_ids().into_iter().enumerate() {
            let r = s.prepare_score(id, i as f64 / 10.0, false, None, at()).unwrap();
            events.push(SessionEvent::Scored(r.clone()));
            s.apply(r);
        }
        let again = AnnotationSession::replay(&events).unwrap();
        assert_eq!(
            render_gold(&again.export_gold(false).unwrap()),
            render_gold(&s.export_gold(false).unwrap())
        );

        let mut tampered = events.clone();
        tampered.swap(1, 2);
        assert!(AnnotationSession::replay(&tampered).is_err());
    }
}
