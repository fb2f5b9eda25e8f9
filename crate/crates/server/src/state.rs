use std::collections::BTreeMap;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use branchbook_core::session::{parse_event_lines, Event, RootSelector, Session, SessionError};
use branchbook_core::{Config, Engine};
use sha2::{Digest, Sha256};

use crate::error::ApiError;
use crate::store::{SessionRecord, Store};

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("data directory: {0}")]
    Io(#[from] io::Error),
    #[error("stored dataset {id}: {source}")]
    Dataset { id: String, source: branchbook_core::dataset::DatasetError },
    #[error("stored session {id} references unknown dataset {dataset}")]
    Orphan { id: String, dataset: String },
    #[error("stored session {id}: {source}")]
    Replay { id: String, source: SessionError },
}

pub struct DatasetEntry {
    pub name: String,
    pub engine: Engine,
}

pub struct SessionEntry {
    pub id: String,
    pub dataset_id: String,
    pub engine: Arc<DatasetEntry>,
    pub session: Session,
}

struct Inner {
    config: Config,
    store: Option<Store>,
    datasets: RwLock<BTreeMap<String, Arc<DatasetEntry>>>,
    sessions: RwLock<BTreeMap<String, Arc<RwLock<SessionEntry>>>>,
    next_session: AtomicU64,
}

/// Shared service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

/// `ds-` and the first 16 hex digits of SHA-256 over the name and the bytes.
pub fn dataset_id(name: &str, csv: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(name.as_bytes());
    hasher.update([0u8]);
    hasher.update(csv);
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("ds-{hex}")
}

impl AppState {
    /// In-memory state; nothing survives the process.
    pub fn new(config: Config) -> Self {
        Self::build(config, None)
    }

    /// State backed by `dir`. Stored datasets are re-mined and stored
    /// sessions rebuilt by replaying their logs.
    pub fn open(config: Config, dir: impl Into<PathBuf>) -> Result<Self, StartupError> {
        let store = Store::open(dir)?;
        let state = Self::build(config, Some(store.clone()));
        for (id, name, csv) in store.datasets()? {
            let engine = Engine::from_csv(&csv, &name, state.inner.config.clone())
                .map_err(|source| StartupError::Dataset { id: id.clone(), source })?;
            state.write_datasets().insert(id, Arc::new(DatasetEntry { name, engine }));
        }
        let mut highest = 0;
        for (record, log) in store.sessions()? {
            let dataset = state.dataset(&record.dataset_id).map_err(|_| StartupError::Orphan {
                id: record.session_id.clone(),
                dataset: record.dataset_id.clone(),
            })?;
            let replay = |log: &str| Session::replay(&dataset.engine, &parse_event_lines(log)?);
            let session = replay(&log).map_err(|source| StartupError::Replay { id: record.session_id.clone(), source })?;
            if let Some(n) = record.session_id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                highest = highest.max(n);
            }
            tracing::info!(session = %record.session_id, events = session.events().len(), "replayed session");
            let entry = SessionEntry { id: record.session_id.clone(), dataset_id: record.dataset_id, engine: dataset, session };
            state.write_sessions().insert(record.session_id, Arc::new(RwLock::new(entry)));
        }
        state.inner.next_session.store(highest + 1, Ordering::SeqCst);
        Ok(state)
    }

    fn build(config: Config, store: Option<Store>) -> Self {
        Self {
            inner: Arc::new(Inner {
                config,
                store,
                datasets: RwLock::default(),
                sessions: RwLock::default(),
                next_session: AtomicU64::new(1),
            }),
        }
    }

    fn write_datasets(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, Arc<DatasetEntry>>> {
        self.inner.datasets.write().unwrap_or_else(|p| p.into_inner())
    }

    fn write_sessions(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, Arc<RwLock<SessionEntry>>>> {
        self.inner.sessions.write().unwrap_or_else(|p| p.into_inner())
    }

    /// Loads and mines a CSV. Uploading the same bytes under the same name
    /// again returns the existing dataset.
    pub fn add_dataset(&self, name: &str, csv: &[u8]) -> Result<(String, Arc<DatasetEntry>), ApiError> {
        let id = dataset_id(name, csv);
        if let Ok(existing) = self.dataset(&id) {
            return Ok((id, existing));
        }
        let engine = Engine::from_csv(csv, name, self.inner.config.clone())?;
        if let Some(store) = &self.inner.store {
            store.save_dataset(&id, name, csv).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        let entry = Arc::new(DatasetEntry { name: name.to_string(), engine });
        let entry = self.write_datasets().entry(id.clone()).or_insert(entry).clone();
        Ok((id, entry))
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<DatasetEntry>, ApiError> {
        let map = self.inner.datasets.read().unwrap_or_else(|p| p.into_inner());
        map.get(id).cloned().ok_or_else(|| ApiError::unknown_dataset(id))
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.inner.datasets.read().unwrap_or_else(|p| p.into_inner()).keys().cloned().collect()
    }

    pub fn create_session(&self, dataset_id: &str, selector: Option<RootSelector>) -> Result<Arc<RwLock<SessionEntry>>, ApiError> {
        let dataset = self.dataset(dataset_id)?;
        let session = Session::create(&dataset.engine, selector)?;
        let n = self.inner.next_session.fetch_add(1, Ordering::SeqCst);
        let id = format!("s{n}");
        if let Some(store) = &self.inner.store {
            let record = SessionRecord { session_id: id.clone(), dataset_id: dataset_id.to_string() };
            store.save_session(&record, session.events()).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        let entry = Arc::new(RwLock::new(SessionEntry {
            id: id.clone(),
            dataset_id: dataset_id.to_string(),
            engine: dataset,
            session,
        }));
        self.write_sessions().insert(id, entry.clone());
        Ok(entry)
    }

    pub fn session(&self, id: &str) -> Result<Arc<RwLock<SessionEntry>>, ApiError> {
        let map = self.inner.sessions.read().unwrap_or_else(|p| p.into_inner());
        map.get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Runs `f` against one session. Readers share the session's lock;
    /// [`AppState::mutate`] takes it exclusively.
    pub fn with_session<R>(&self, id: &str, f: impl FnOnce(&SessionEntry) -> Result<R, ApiError>) -> Result<R, ApiError> {
        let entry = self.session(id)?;
        let guard = entry.read().unwrap_or_else(|p| p.into_inner());
        f(&guard)
    }

    /// Applies `event` to a copy of the session, appends it to the on-disk
    /// log, then commits. Mutations on one session are serialized.
    pub fn mutate<R>(
        &self,
        id: &str,
        event: Event,
        f: impl FnOnce(&SessionEntry) -> R,
    ) -> Result<R, ApiError> {
        let entry = self.session(id)?;
        let mut guard = entry.write().unwrap_or_else(|p| p.into_inner());
        let mut next = guard.session.clone();
        next.apply(&guard.engine.engine, event.clone())?;
        if let Some(store) = &self.inner.store {
            let seq = guard.session.events().len();
            store.append_event(&guard.id, seq, &event).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        guard.session = next;
        Ok(f(&guard))
    }
}
