use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{parse_journal, snapshot_json, JournalEntry, SessionStore, StoreError};
use crate::career::Session;
use crate::ids::SessionId;

const JOURNAL: &str = "journal.ndjson";
const SNAPSHOT: &str = "snapshot.json";

/// One directory per session holding `journal.ndjson` and `snapshot.json`.
#[derive(Debug)]
pub struct FileStore {
    root: PathBuf,
    durable: bool,
    /// Next expected seq per session, filled lazily from disk.
    next_seq: Mutex<HashMap<SessionId, u64>>,
}

impl FileStore {
    /// Opens (creating if needed) a store rooted at `root`. Writes are fsynced.
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(FileStore {
            root,
            durable: true,
            next_seq: Mutex::new(HashMap::new()),
        })
    }

    /// Skips fsync; for throwaway stores in tests and batch runs.
    pub fn without_fsync(mut self) -> Self {
        self.durable = false;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, session: &SessionId) -> Result<PathBuf, StoreError> {
        if !session.is_well_formed() {
            return Err(StoreError::InvalidId(session.0.clone()));
        }
        Ok(self.root.join(session.as_str()))
    }

    fn read(&self, session: &SessionId, name: &str) -> Result<String, StoreError> {
        let path = self.session_dir(session)?.join(name);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => StoreError::NotFound(session.clone()),
            _ => StoreError::Io(e),
        })
    }

    fn stored_len(&self, session: &SessionId) -> Result<u64, StoreError> {
        match self.read(session, JOURNAL) {
            Ok(text) => {
                let entries = parse_journal(&text).map_err(|e| StoreError::Corruption {
                    session: session.clone(),
                    detail: e.to_string(),
                })?;
                Ok(entries.len() as u64)
            }
            Err(StoreError::NotFound(_)) => Ok(0),
            Err(e) => Err(e),
        }
    }
}

impl SessionStore for FileStore {
    fn append(&self, session: &SessionId, entry: &JournalEntry) -> Result<u64, StoreError> {
        let dir = self.session_dir(session)?;
        let mut next_seq = self.next_seq.lock().expect("store lock");
        let expected = match next_seq.get(session) {
            Some(n) => *n,
            None => self.stored_len(session)?,
        };
        if entry.seq != expected {
            return Err(StoreError::SeqConflict {
                session: session.clone(),
                expected,
                got: entry.seq,
            });
        }
        if expected == 0 {
            fs::create_dir_all(&dir)?;
        }
        let mut line = entry.to_line();
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(JOURNAL))?;
        file.write_all(line.as_bytes())?;
        if self.durable {
            file.sync_data()?;
        }
        next_seq.insert(session.clone(), expected + 1);
        Ok(entry.seq)
    }

    fn save_snapshot(&self, session: &Session) -> Result<(), StoreError> {
        let dir = self.session_dir(&session.id)?;
        if !dir.is_dir() {
            return Err(StoreError::NotFound(session.id.clone()));
        }
        let tmp = dir.join("snapshot.json.tmp");
        let mut file = File::create(&tmp)?;
        file.write_all(snapshot_json(session).as_bytes())?;
        if self.durable {
            file.sync_all()?;
        }
        fs::rename(&tmp, dir.join(SNAPSHOT))?;
        Ok(())
    }

    fn journal_text(&self, session: &SessionId) -> Result<String, StoreError> {
        self.read(session, JOURNAL)
    }

    fn snapshot_text(&self, session: &SessionId) -> Result<String, StoreError> {
        self.read(session, SNAPSHOT)
    }

    fn list(&self) -> Result<Vec<SessionId>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.path().join(JOURNAL).is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    ids.push(SessionId(name.to_string()));
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}
