use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Identifier assigned at ingest, increasing in file order starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReviewId(pub u64);

impl fmt::Display for ReviewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmpStatus {
    CurrentEmployee,
    FormerEmployee,
}

impl EmpStatus {
    pub fn label(self) -> &'static str {
        match self {
            EmpStatus::CurrentEmployee => "Current Employee",
            EmpStatus::FormerEmployee => "Former Employee",
        }
    }
}

impl fmt::Display for EmpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EmpStatus {
    type Err = String;

    /// Accepts "Current Employee", "former employee", and the longer
    /// tenure-qualified variants found in scraped dumps
    /// ("Current Employee, more than 1 year").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        if lower.starts_with("current") {
            Ok(EmpStatus::CurrentEmployee)
        } else if lower.starts_with("former") {
            Ok(EmpStatus::FormerEmployee)
        } else {
            Err(format!("unknown employee status {s:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Human,
    Synthetic,
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "human" => Ok(Source::Human),
            "synthetic" => Ok(Source::Synthetic),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

/// One job review record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub id: ReviewId,
    /// Target sentiment in `[0, 1]`; present for synthetic reviews.
    pub orig_sentiment: Option<f64>,
    pub date_of_review: NaiveDate,
    pub emp_status: EmpStatus,
    pub job_title: String,
    pub pros: String,
    pub cons: String,
    pub source: Source,
    /// Columns outside the standard six, kept verbatim.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

/// Formats a date as `M/D/YYYY` without zero padding.
pub(crate) fn format_date(date: NaiveDate) -> String {
    format!("{}/{}/{}", date.month(), date.day(), date.year())
}

/// Parses `M/D/YYYY` (padding optional) or ISO `YYYY-MM-DD`.
pub(crate) fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    if raw.contains('/') {
        let mut parts = raw.split('/');
        let month = parts.next()?.trim().parse().ok()?;
        let day = parts.next()?.trim().parse().ok()?;
        let year = parts.next()?.trim().parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        NaiveDate::from_ymd_opt(year, month, day)
    } else {
        NaiveDate::parse_from_str(raw, "%Y-%m-%d").ok()
    }
}
