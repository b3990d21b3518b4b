use std::collections::BTreeMap;
use std::sync::Mutex;

use super::{snapshot_json, JournalEntry, SessionStore, StoreError};
use crate::career::Session;
use crate::ids::SessionId;

#[derive(Debug, Default)]
struct Record {
    lines: Vec<String>,
    snapshot: Option<String>,
}

/// In-process store holding the same NDJSON text a [`super::FileStore`] would write.
#[derive(Debug, Default)]
pub struct MemoryStore {
    sessions: Mutex<BTreeMap<SessionId, Record>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets a session; used to bound memory in long batch runs.
    pub fn remove(&self, session: &SessionId) {
        self.sessions.lock().expect("store lock").remove(session);
    }
}

impl SessionStore for MemoryStore {
    fn append(&self, session: &SessionId, entry: &JournalEntry) -> Result<u64, StoreError> {
        let mut sessions = self.sessions.lock().expect("store lock");
        if entry.seq > 0 && !sessions.contains_key(session) {
            return Err(StoreError::NotFound(session.clone()));
        }
        let record = sessions.entry(session.clone()).or_default();
        let expected = record.lines.len() as u64;
        if entry.seq != expected {
            return Err(StoreError::SeqConflict {
                session: session.clone(),
                expected,
                got: entry.seq,
            });
        }
        record.lines.push(entry.to_line());
        Ok(entry.seq)
    }

    fn save_snapshot(&self, session: &Session) -> Result<(), StoreError> {
        let mut sessions = self.sessions.lock().expect("store lock");
        let record = sessions
            .get_mut(&session.id)
            .ok_or_else(|| StoreError::NotFound(session.id.clone()))?;
        record.snapshot = Some(snapshot_json(session));
        Ok(())
    }

    fn journal_text(&self, session: &SessionId) -> Result<String, StoreError> {
        let sessions = self.sessions.lock().expect("store lock");
        let record = sessions
            .get(session)
            .ok_or_else(|| StoreError::NotFound(session.clone()))?;
        let mut text = String::new();
        for line in &record.lines {
            text.push_str(line);
            text.push('\n');
        }
        Ok(text)
    }

    fn snapshot_text(&self, session: &SessionId) -> Result<String, StoreError> {
        let sessions = self.sessions.lock().expect("store lock");
        sessions
            .get(session)
            .and_then(|r| r.snapshot.clone())
            .ok_or_else(|| StoreError::NotFound(session.clone()))
    }

    fn list(&self) -> Result<Vec<SessionId>, StoreError> {
        Ok(self
            .sessions
            .lock()
            .expect("store lock")
            .keys()
            .cloned()
            .collect())
    }
}
