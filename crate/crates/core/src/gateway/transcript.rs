use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ChatExchange;

/// One JSONL line of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub provider: String,
    pub nonce: u64,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    #[serde(flatten)]
    pub exchange: ChatExchange,
    /// `ok`, or the parse/transport error text.
    pub outcome: String,
}

/// Append-only JSONL transcript shared by concurrent callers.
pub struct TranscriptLog {
    out: Mutex<BufWriter<File>>,
}

impl TranscriptLog {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(Self {
            out: Mutex::new(BufWriter::new(File::create(path)?)),
        })
    }

    pub fn record(&self, entry: &TranscriptEntry) -> std::io::Result<()> {
        let line = serde_json::to_string(entry).map_err(std::io::Error::other)?;
        let mut out = self.out.lock().expect("transcript lock poisoned");
        writeln!(out, "{line}")?;
        out.flush()
    }
}
