//! Append-only JSON-lines trajectory traces.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HomeState, LightAction, SimError, StepEvents};
use crate::agent::RewardBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// A simulator clock step.
    Step,
    /// A parsed voice/text command applied to the home.
    Command,
    /// A manual override from an occupant.
    Override,
    /// A change of control mode; `source` names the new mode.
    Mode,
}

/// One line of a trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Sequence number, strictly increasing within one log.
    pub t: u64,
    pub kind: TraceKind,
    /// State after the record's mutation was applied.
    pub state: HomeState,
    pub actions: Vec<LightAction>,
    pub reward: Option<RewardBreakdown>,
    pub events: StepEvents,
    #[serde(rename = "override")]
    pub override_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

pub struct TraceWriter {
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn append(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| SimError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    /// Writes one record and flushes it.
    pub fn write(&mut self, record: &TraceRecord) -> Result<(), SimError> {
        let io = |source| SimError::Io {
            path: "trajectory log".into(),
            source,
        };
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n").map_err(io)?;
        self.out.flush().map_err(io)
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>, SimError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
