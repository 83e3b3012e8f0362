//! Deterministic run transcripts.
//!
//! One record per simulated event, line-delimited as
//! `seq|time|actor|event|detail-hex|outcome`. Identical scenario and seed
//! produce byte-identical transcripts; `verify` re-runs and compares.

use thiserror::Error;

use crate::codec::{Reader, Writer};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {0}: expected seq|time|actor|event|detail-hex|outcome")]
    BadLine(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub seq: u64,
    pub time: u64,
    pub actor: String,
    pub event: String,
    pub detail: Vec<u8>,
    pub outcome: String,
}

impl TranscriptRecord {
    pub fn to_line(&self) -> String {
        debug_assert!(!self.actor.contains('|'));
        debug_assert!(!self.event.contains('|'));
        debug_assert!(!self.outcome.contains('|'));
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.seq,
            self.time,
            self.actor,
            self.event,
            hex::encode(&self.detail),
            self.outcome
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, TranscriptError> {
        let parts: Vec<&str> = line.split('|').collect();
        let [seq, time, actor, event, detail_hex, outcome] = parts[..] else {
            return Err(TranscriptError::BadLine(line_no));
        };
        Ok(Self {
            seq: seq.parse().map_err(|_| TranscriptError::BadLine(line_no))?,
            time: time
                .parse()
                .map_err(|_| TranscriptError::BadLine(line_no))?,
            actor: actor.to_string(),
            event: event.to_string(),
            detail: hex::decode(detail_hex).map_err(|_| TranscriptError::BadLine(line_no))?,
            outcome: outcome.to_string(),
        })
    }

    /// Decode a detail payload back into its key/value pairs.
    pub fn detail_pairs(&self) -> Option<Vec<(String, String)>> {
        let mut r = Reader::new(&self.detail);
        let count = r.u32().ok()?;
        let mut pairs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            pairs.push((r.str().ok()?, r.str().ok()?));
        }
        r.done().ok()?;
        Some(pairs)
    }
}

/// Canonical detail payload: ordered key/value string pairs.
pub fn detail(pairs: &[(&str, &str)]) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(pairs.len() as u32);
    for (key, value) in pairs {
        w.str(key);
        w.str(value);
    }
    w.finish()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&record.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            records.push(TranscriptRecord::parse_line(line, idx + 1)?);
        }
        Ok(Self { records })
    }

    /// `event outcome` lines for every scripted event, the golden-file form.
    pub fn outcome_summary(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&format!(
                "{} {} {}\n",
                record.time, record.event, record.outcome
            ));
        }
        out
    }
}
