use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{StoreError, AUDIT_FILE};
use crate::workflow::SessionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Transition,
    Recommendation,
    Revision,
    ThresholdChange,
    Retention,
    ConfigChange,
    CatalogChange,
    CaseImport,
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub timestamp: DateTime<Utc>,
    /// `None` for changes made outside a session (config, catalog, imports).
    #[serde(default)]
    pub session_id: Option<SessionId>,
    pub kind: AuditKind,
    #[serde(default)]
    pub before: serde_json::Value,
    #[serde(default)]
    pub after: serde_json::Value,
}

pub(super) fn append(path: &Path, events: &[AuditEvent]) -> Result<(), StoreError> {
    if events.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    for e in events {
        serde_json::to_writer(&mut buf, e)
            .map_err(|e| StoreError::corrupt(AUDIT_FILE, e.to_string()))?;
        buf.push(b'\n');
    }
    let mut file = File::options()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| StoreError::io(path, e))?;
    file.write_all(&buf)
        .and_then(|_| file.sync_data())
        .map_err(|e| StoreError::io(path, e))
}

/// Every event in file order. A torn final line (crash mid-append) is
/// skipped; a bad line anywhere else is an error.
pub(super) fn read_all(path: &Path) -> Result<Vec<AuditEvent>, StoreError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => out.push(e),
            Err(_) if !complete && i + 1 == lines.len() => {}
            Err(e) => {
                return Err(StoreError::corrupt(
                    AUDIT_FILE,
                    format!("line {}: {e}", i + 1),
                ))
            }
        }
    }
    Ok(out)
}
