//! Append-only event log for rounds and label submissions (JSON lines).

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::rounds::Round;
use super::rules::DimensionAnnotation;
use super::taxonomy::FineCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    /// Position in the log; later records supersede earlier ones for the same round, tweet and coder.
    pub seq: u64,
    pub tweet_id: String,
    pub coder: String,
    pub round: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<DimensionAnnotation>,
    pub category: FineCategory,
    /// Category set directly by an adjudicator instead of derived from dimensions.
    #[serde(default)]
    pub is_override: bool,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RoundCreated(Round),
    LabelSubmitted(LabelRecord),
}

#[derive(Debug, Default)]
pub struct LabelStore {
    path: Option<PathBuf>,
    pub rounds: Vec<Round>,
    /// Full history in submission order.
    pub records: Vec<LabelRecord>,
}

impl LabelStore {
    pub fn in_memory() -> Self {
        LabelStore::default()
    }

    /// Opens (creating if absent) a log file and replays it.
    pub fn open(path: &Path) -> Result<Self> {
        let mut store = LabelStore { path: Some(path.to_path_buf()), ..Default::default() };
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: Event = serde_json::from_str(&line)
                    .map_err(|e| Error::InvalidInput(format!("{}:{}: corrupt event: {e}", path.display(), i + 1)))?;
                store.apply(event);
            }
        }
        Ok(store)
    }

    fn apply(&mut self, event: Event) {
        match event {
            Event::RoundCreated(r) => self.rounds.push(r),
            Event::LabelSubmitted(l) => self.records.push(l),
        }
    }

    /// Persists then applies; nothing is applied if the write fails.
    pub fn append(&mut self, event: Event) -> Result<()> {
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&event)?;
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
            f.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
            f.sync_data().map_err(|e| Error::io(path, e))?;
        }
        self.apply(event);
        Ok(())
    }

    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64 + 1
    }

    pub fn next_round_id(&self) -> u64 {
        self.rounds.iter().map(|r| r.id).max().unwrap_or(0) + 1
    }

    pub fn round(&self, id: u64) -> Result<&Round> {
        self.rounds.iter().find(|r| r.id == id).ok_or_else(|| Error::NotFound(format!("round {id}")))
    }

    /// Latest record per (tweet, coder) in a round.
    pub fn current(&self, round: u64) -> Vec<&LabelRecord> {
        let mut latest: std::collections::BTreeMap<(&str, &str), &LabelRecord> = Default::default();
        for r in self.records.iter().filter(|r| r.round == round) {
            latest.insert((r.tweet_id.as_str(), r.coder.as_str()), r);
        }
        let mut out: Vec<&LabelRecord> = latest.into_values().collect();
        out.sort_by_key(|r| r.seq);
        out
    }
}
