//! On-disk layout under the data directory:
//!
//! ```text
//! datasets/<id>.csv            uploaded bytes
//! datasets/<id>.json           {"name": ...}
//! sessions/<id>.json           {"sessionId": ..., "datasetId": ...}
//! sessions/<id>.events.jsonl   one EventRecord per line, appended per mutation
//! ```

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use branchbook_core::session::{Event, EventRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionRecord {
    pub session_id: String,
    pub dataset_id: String,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self { root })
    }

    fn dataset_path(&self, id: &str, ext: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{id}.{ext}"))
    }

    fn session_path(&self, id: &str, ext: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.{ext}"))
    }

    pub fn save_dataset(&self, id: &str, name: &str, csv: &[u8]) -> io::Result<()> {
        fs::write(self.dataset_path(id, "csv"), csv)?;
        let meta = serde_json::to_vec(&DatasetMeta { name: name.to_string() })?;
        fs::write(self.dataset_path(id, "json"), meta)
    }

    pub fn save_session(&self, record: &SessionRecord, events: &[Event]) -> io::Result<()> {
        fs::write(self.session_path(&record.session_id, "json"), serde_json::to_vec(record)?)?;
        let mut lines = String::new();
        for (seq, event) in events.iter().enumerate() {
            lines.push_str(&EventRecord { seq, event: event.clone() }.to_line());
            lines.push('\n');
        }
        fs::write(self.session_path(&record.session_id, "events.jsonl"), lines)
    }

    pub fn append_event(&self, session_id: &str, seq: usize, event: &Event) -> io::Result<()> {
        let mut file = OpenOptions::new()
            .append(true)
            .open(self.session_path(session_id, "events.jsonl"))?;
        let mut line = EventRecord { seq, event: event.clone() }.to_line();
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()
    }

    /// `(id, name, bytes)` of every stored dataset, sorted by id.
    pub fn datasets(&self) -> io::Result<Vec<(String, String, Vec<u8>)>> {
        let mut out = Vec::new();
        for id in stems(&self.root.join("datasets"), ".json")? {
            let meta: DatasetMeta = serde_json::from_slice(&fs::read(self.dataset_path(&id, "json"))?)?;
            let csv = fs::read(self.dataset_path(&id, "csv"))?;
            out.push((id, meta.name, csv));
        }
        Ok(out)
    }

    /// Stored sessions with their raw event log text, sorted by id.
    pub fn sessions(&self) -> io::Result<Vec<(SessionRecord, String)>> {
        let mut out = Vec::new();
        for id in stems(&self.root.join("sessions"), ".json")? {
            let record: SessionRecord = serde_json::from_slice(&fs::read(self.session_path(&id, "json"))?)?;
            let log = fs::read_to_string(self.session_path(&id, "events.jsonl"))?;
            out.push((record, log));
        }
        Ok(out)
    }
}

fn stems(dir: &Path, suffix: &str) -> io::Result<Vec<String>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter_map(|n| n.strip_suffix(suffix).map(String::from))
        .filter(|n| !n.contains('.'))
        .collect();
    names.sort();
    Ok(names)
}
