use serde::{Deserialize, Serialize};

use super::tree::TreeSnapshot;
use super::{Cell, Event, Session, SessionError};
use crate::engine::Engine;

pub const SESSION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionMeta {
    pub format_version: u32,
    pub table: String,
    /// Fingerprint of the insight space the log was recorded against.
    pub space: String,
}

/// Exported session: the log is authoritative, the materialized cells and
/// tree are there for readers and are checked on import.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionDocument {
    pub meta: SessionMeta,
    pub event_log: Vec<Event>,
    #[serde(default)]
    pub materialized_cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeSnapshot>,
}

/// One line of an append-only event log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: usize,
    pub event: Event,
}

/// Parses a line-delimited log. Sequence numbers must run 0, 1, 2, ...
pub fn parse_event_lines(text: &str) -> Result<Vec<Event>, SessionError> {
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(line).map_err(|e| SessionError::CorruptLog {
            seq: events.len(),
            reason: format!("line {}: {e}", n + 1),
        })?;
        if record.seq != events.len() {
            return Err(SessionError::CorruptLog {
                seq: events.len(),
                reason: format!("expected seq {}, found {}", events.len(), record.seq),
            });
        }
        events.push(record.event);
    }
    Ok(events)
}

impl EventRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

impl Session {
    pub fn to_document(&self) -> SessionDocument {
        SessionDocument {
            meta: SessionMeta {
                format_version: SESSION_FORMAT_VERSION,
                table: self.table_ref.clone(),
                space: self.space_ref.clone(),
            },
            event_log: self.event_log.clone(),
            materialized_cells: self.cells.clone(),
            tree: Some(self.tree()),
        }
    }

    /// Canonical JSON export. Identical event logs give identical bytes.
    pub fn export_json(&self) -> String {
        crate::canonical_json(&self.to_document())
    }

    /// The log as JSON lines, one [`EventRecord`] each.
    pub fn event_lines(&self) -> String {
        self.event_log
            .iter()
            .enumerate()
            .map(|(seq, event)| EventRecord { seq, event: event.clone() }.to_line() + "\n")
            .collect()
    }

    /// Replays an exported document against `engine`.
    ///
    /// Fails when the format version or space fingerprint differ, or when the
    /// document carries materialized cells that replay does not reproduce.
    pub fn import(engine: &Engine, doc: &SessionDocument) -> Result<Self, SessionError> {
        if doc.meta.format_version != SESSION_FORMAT_VERSION {
            return Err(SessionError::VersionMismatch(format!(
                "session format {} (expected {SESSION_FORMAT_VERSION})",
                doc.meta.format_version
            )));
        }
        if doc.meta.space != engine.fingerprint() {
            return Err(SessionError::VersionMismatch(format!(
                "insight space {} (expected {})",
                doc.meta.space,
                engine.fingerprint()
            )));
        }
        let session = Self::replay(engine, &doc.event_log)?;
        if !doc.materialized_cells.is_empty() && doc.materialized_cells != session.cells {
            return Err(SessionError::Malformed("materialized cells differ from replay".into()));
        }
        Ok(session)
    }

    pub fn import_json(engine: &Engine, text: &str) -> Result<Self, SessionError> {
        let doc: SessionDocument = serde_json::from_str(text).map_err(|e| SessionError::Malformed(e.to_string()))?;
        Self::import(engine, &doc)
    }
}
