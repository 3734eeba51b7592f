use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{AnnotationError, AnnotationSession, SessionEvent};

/// One `<session_id>.jsonl` event log per session in a directory.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, AnnotationError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    /// Writes the creation event of a new session and syncs it to disk.
    pub fn create(&self, created: &SessionEvent) -> Result<(), AnnotationError> {
        let SessionEvent::Created { session_id, .. } = created else {
            return Err(AnnotationError::Domain("not a creation event".into()));
        };
        let mut file = OpenOptions::new().write(true).create_new(true).open(self.path(session_id))?;
        write_event(&mut file, created)?;
        // Make the new directory entry durable too.
        if let Ok(dir) = File::open(&self.dir) {
            let _ = dir.sync_all();
        }
        Ok(())
    }

    /// Appends one event; returns once it is on disk.
    pub fn append(&self, session_id: &str, event: &SessionEvent) -> Result<(), AnnotationError> {
        let mut file = OpenOptions::new().append(true).open(self.path(session_id))?;
        write_event(&mut file, event)
    }

    /// Replays every session log in the directory, sorted by file name.
    ///
    /// A final line without its newline is the remains of a write that was
    /// never acknowledged; it is cut off so later appends start clean. Any
    /// other bad line is an error.
    pub fn load_all(&self) -> Result<Vec<AnnotationSession>, AnnotationError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        paths.iter().map(|p| load(p)).collect()
    }
}

fn write_event(file: &mut File, event: &SessionEvent) -> Result<(), AnnotationError> {
    let mut line = serde_json::to_vec(event).map_err(std::io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_data()?;
    Ok(())
}

fn load(path: &Path) -> Result<AnnotationSession, AnnotationError> {
    let corrupt = |message: String| AnnotationError::Corrupt {
        path: path.display().to_string(),
        message,
    };
    let mut reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    let mut offset = 0u64;
    loop {
        line.clear();
        let read = reader.read_line(&mut line)?;
        if read == 0 {
            break;
        }
        number += 1;
        if !line.ends_with('\n') {
            tracing::warn!("{}: dropping unterminated final line", path.display());
            let file = OpenOptions::new().write(true).open(path)?;
            file.set_len(offset)?;
            file.sync_all()?;
            break;
        }
        offset += read as u64;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| corrupt(format!("line {number}: {e}")))?;
        events.push(event);
    }
    AnnotationSession::replay(&events).map_err(|e| corrupt(e.to_string()))
}
