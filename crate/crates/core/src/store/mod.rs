//! JSON file persistence for the case base, scenario catalog, configuration
//! and sessions, plus an append-only audit log.
//!
//! Layout of a data directory:
//!
//! ```text
//! cases.json       {"schema_version": 1, "payload": [Case, ...]}
//! scenarios.json   {"schema_version": 1, "payload": [ControlScenario, ...]}
//! config.json      {"schema_version": 1, "payload": SystemConfig}
//! sessions.json    {"schema_version": 1, "payload": [DecisionSession, ...]}
//! audit.ndjson     one AuditEvent per line
//! .lock            held while a Store is open
//! ```
//!
//! The four documents are authoritative. The audit log is advisory: after a
//! crash between an audit append and a save, the log may mention a change the
//! documents do not contain, and recovery trusts the documents.

mod audit;
mod files;

pub use audit::{AuditEvent, AuditKind};

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbr::{CaseBase, RetrievalConfig};
use crate::workflow::{ConsistencyPolicy, ScenarioCatalog, SessionRegistry};

pub const SCHEMA_VERSION: u32 = 1;

pub const CASES_FILE: &str = "cases.json";
pub const SCENARIOS_FILE: &str = "scenarios.json";
pub const CONFIG_FILE: &str = "config.json";
pub const SESSIONS_FILE: &str = "sessions.json";
pub const AUDIT_FILE: &str = "audit.ndjson";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file}: {message}")]
    Corrupt { file: String, message: String },
    #[error("{file}: unsupported schema version {found} (this build reads version {supported})")]
    UnsupportedVersion {
        file: String,
        found: u64,
        supported: u32,
    },
    #[error("{} is locked by another process", path.display())]
    Locked { path: PathBuf },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn corrupt(file: &str, message: impl Into<String>) -> Self {
        StoreError::Corrupt {
            file: file.to_string(),
            message: message.into(),
        }
    }
}

/// Everything a deployment can configure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub consistency: ConsistencyPolicy,
}

/// The full persisted state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SystemState {
    pub cases: CaseBase,
    pub scenarios: ScenarioCatalog,
    pub config: SystemConfig,
    pub sessions: SessionRegistry,
}

impl SystemState {
    /// Cross-document checks: every case or session reference resolves.
    pub fn validate(&self) -> Result<(), StoreError> {
        for case in self.cases.cases() {
            if let Some(r) = &case.retrieval {
                if r.source_case >= case.id || self.cases.get(r.source_case).is_none() {
                    return Err(StoreError::corrupt(
                        CASES_FILE,
                        format!(
                            "case {} names source case {} which is not an earlier case",
                            case.id, r.source_case
                        ),
                    ));
                }
            }
        }
        for s in self.sessions.sessions() {
            let recommended = s
                .recommendation()
                .into_iter()
                .chain(s.audit().iter().filter_map(|t| t.recommendation.as_ref()));
            for rec in recommended {
                if self.cases.get(rec.source_case).is_none() {
                    return Err(StoreError::corrupt(
                        SESSIONS_FILE,
                        format!(
                            "session {} recommends from unknown case {}",
                            s.id(),
                            rec.source_case
                        ),
                    ));
                }
            }
            if let Some(closing) = s.closing() {
                if self.cases.get(closing.case_id).is_none() {
                    return Err(StoreError::corrupt(
                        SESSIONS_FILE,
                        format!(
                            "session {} was retained as unknown case {}",
                            s.id(),
                            closing.case_id
                        ),
                    ));
                }
            }
            if let Some(p) = s.predecessor() {
                if p >= s.id() || self.sessions.get(p).is_none() {
                    return Err(StoreError::corrupt(
                        SESSIONS_FILE,
                        format!("session {} has unknown predecessor {p}", s.id()),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Result of [`Store::load`].
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub state: SystemState,
    /// Temporary files left behind by an interrupted save. They are ignored.
    pub leftovers: Vec<PathBuf>,
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema_version: u32,
    payload: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    schema_version: u64,
    payload: serde_json::Value,
}

/// A data directory, locked for the lifetime of this value.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    _lock: File,
}

impl Store {
    /// Opens (creating if needed) a data directory and takes its lock.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let lock_path = dir.join(LOCK_FILE);
        let lock = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| StoreError::io(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => {
                return Err(StoreError::Locked { path: lock_path })
            }
            Err(fs::TryLockError::Error(e)) => return Err(StoreError::io(&lock_path, e)),
        }
        Ok(Self { dir, _lock: lock })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Reads and validates every document. See [`load_dir`].
    pub fn load(&self) -> Result<Loaded, StoreError> {
        load_dir(&self.dir)
    }

    /// Writes every document, each through a temporary file and a rename.
    pub fn save(&self, state: &SystemState) -> Result<(), StoreError> {
        self.write_document(CASES_FILE, &state.cases)?;
        self.write_document(SCENARIOS_FILE, &state.scenarios)?;
        self.write_document(CONFIG_FILE, &state.config)?;
        self.write_document(SESSIONS_FILE, &state.sessions)
    }

    fn write_document<T: Serialize>(&self, name: &str, payload: &T) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(&EnvelopeOut {
            schema_version: SCHEMA_VERSION,
            payload,
        })
        .map_err(|e| StoreError::corrupt(name, e.to_string()))?;
        bytes.push(b'\n');
        files::write_atomic(&self.dir.join(name), &bytes)
    }

    /// Appends events to the audit log and syncs it.
    pub fn append_audit(&self, events: &[AuditEvent]) -> Result<(), StoreError> {
        audit::append(&self.dir.join(AUDIT_FILE), events)
    }

    /// Events of one session in insertion order; empty for unknown sessions.
    pub fn read_audit(
        &self,
        session: crate::workflow::SessionId,
    ) -> Result<Vec<AuditEvent>, StoreError> {
        Ok(audit::read_all(&self.dir.join(AUDIT_FILE))?
            .into_iter()
            .filter(|e| e.session_id == Some(session))
            .collect())
    }

    pub fn read_audit_all(&self) -> Result<Vec<AuditEvent>, StoreError> {
        audit::read_all(&self.dir.join(AUDIT_FILE))
    }
}

/// Reads and validates every document of `dir` without taking the lock.
/// Missing documents take their defaults; nothing is returned unless
/// everything checks out.
pub fn load_dir(dir: &Path) -> Result<Loaded, StoreError> {
    let cases: CaseBase = read_document(dir, CASES_FILE)?.unwrap_or_default();
    let scenarios: ScenarioCatalog = read_document(dir, SCENARIOS_FILE)?.unwrap_or_default();
    let config: SystemConfig = read_document(dir, CONFIG_FILE)?.unwrap_or_default();
    let sessions: SessionRegistry = read_document(dir, SESSIONS_FILE)?.unwrap_or_default();
    let state = SystemState {
        cases,
        scenarios,
        config,
        sessions,
    };
    state.validate()?;
    let leftovers = match fs::metadata(dir) {
        Ok(_) => files::leftovers(dir)?,
        Err(_) => Vec::new(),
    };
    Ok(Loaded { state, leftovers })
}

fn read_document<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>, StoreError> {
    let path = dir.join(name);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(StoreError::io(&path, e)),
    };
    decode_document(name, &bytes).map(Some)
}

/// Parses one enveloped document, checking the version before the payload.
pub fn decode_document<T: DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<T, StoreError> {
    let envelope: EnvelopeIn =
        serde_json::from_slice(bytes).map_err(|e| StoreError::corrupt(name, e.to_string()))?;
    if envelope.schema_version != u64::from(SCHEMA_VERSION) {
        return Err(StoreError::UnsupportedVersion {
            file: name.to_string(),
            found: envelope.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(envelope.payload).map_err(|e| StoreError::corrupt(name, e.to_string()))
}
