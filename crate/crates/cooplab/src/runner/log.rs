//! Append-only play log: one JSON object per attempt, valid or not.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Choice;
use crate::llm::extract::{Extracted, Verdict};
use crate::llm::{LabelMapping, Stage};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// One agent decision attempt.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlayRecord {
    pub schema_version: u32,
    /// Round in which the attempt ran (1-based).
    pub round: u32,
    pub s: i32,
    pub t: i32,
    pub r: i32,
    pub p: i32,
    /// Slot this attempt was trying to fill (0-based).
    pub slot: u32,
    /// Per-game attempt index; also the third seed component.
    pub attempt: u32,
    pub mapping: LabelMapping,
    /// Pipeline stage; absent for direct (non-chat) agents.
    pub stage: Option<Stage>,
    /// The model's full response; empty for direct agents.
    #[serde(default)]
    pub long_answer: String,
    pub verdict: Option<Verdict>,
    pub extracted: Option<Extracted>,
    pub choice: Option<Choice>,
    /// Whether verification was skipped because the game was relaxed.
    pub verifier_bypassed: bool,
    pub valid: bool,
    /// Endpoint or pipeline failure, when one ended the attempt.
    pub error: Option<String>,
    /// Seed of this play's random stream.
    pub play_seed: u64,
    pub ts_start_ms: u64,
    pub ts_end_ms: u64,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corrupt play log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Appends records to a JSONL file, flushing after every line.
pub struct PlayLogWriter {
    writer: BufWriter<File>,
}

impl PlayLogWriter {
    pub fn append_to(path: &Path) -> Result<Self, LogError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(PlayLogWriter {
            writer: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, record: &PlayRecord) -> Result<(), LogError> {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Reads a whole play log back.
pub fn read_play_log(path: &Path) -> Result<Vec<PlayRecord>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PlayRecord =
            serde_json::from_str(&line).map_err(|e| LogError::Corrupt {
                line: idx + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(attempt: u32, valid: bool) -> PlayRecord {
        PlayRecord {
            schema_version: LOG_SCHEMA_VERSION,
            round: 1,
            s: 2,
            t: 12,
            r: 10,
            p: 5,
            slot: 0,
            attempt,
            mapping: LabelMapping::ACooperates,
            stage: Some(Stage::Verified),
            long_answer: "text".into(),
            verdict: Some(Verdict::Good),
            extracted: Some(Extracted::A),
            choice: Some(Choice::Cooperate),
            verifier_bypassed: false,
            valid,
            error: None,
            play_seed: 99,
            ts_start_ms: 0,
            ts_end_ms: 1,
        }
    }

    #[test]
    fn log_round_trips_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plays.jsonl");
        {
            let mut w = PlayLogWriter::append_to(&path).unwrap();
            w.write(&record(0, true)).unwrap();
        }
        {
            let mut w = PlayLogWriter::append_to(&path).unwrap();
            w.write(&record(1, false)).unwrap();
        }
        let records = read_play_log(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].attempt, 0);
        assert!(!records[1].valid);
        assert_eq!(records[0].schema_version, LOG_SCHEMA_VERSION);
    }

    #[test]
    fn corrupt_lines_are_reported_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plays.jsonl");
        std::fs::write(&path, "{\"not\": \"a record\"}\n").unwrap();
        match read_play_log(&path) {
            Err(LogError::Corrupt { line: 1, .. }) => {}
            other => panic!("expected corrupt-log error, got {other:?}"),
        }
    }
}
