//! Append-only JSON-lines event log. Every append is fsynced before it returns.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ExportRating;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        id: String,
        demographics: BTreeMap<String, String>,
        assigned_items: Vec<String>,
        practice_item: String,
        created_at: String,
    },
    ResponseSubmitted {
        session: String,
        trial_index: usize,
        item_id: String,
        ratings: Vec<ExportRating>,
        submitted_at: String,
    },
}

pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (creating if needed) the log and returns it with the events
    /// already on disk. A torn final line from an interrupted write is dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Event>)> {
        let path = path.as_ref().to_path_buf();
        let mut events = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(|e| Error::file(&path, e))?);
            let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str(line) {
                    Ok(ev) => events.push(ev),
                    Err(_) if i + 1 == last => log::warn!("dropping torn final event log line"),
                    Err(e) => {
                        return Err(Error::Parse {
                            line: i as u64 + 1,
                            message: format!("event log: {e}"),
                        })
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::file(&path, e))?;
        Ok((Self { path, file }, events))
    }

    pub fn append(&mut self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|()| self.file.sync_data())
            .map_err(|e| Error::file(&self.path, e))
    }
}
