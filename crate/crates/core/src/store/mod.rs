//! Append-only session journals and the fold that rebuilds a session from one.
//!
//! The live path and replay share [`apply_event`], so a journal always folds
//! back to exactly the state that produced it.

mod clock;
mod file;
mod memory;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::career::{CareerError, CompletionReason, Session, SessionConfig, UserProfile};
use crate::ids::{EventId, SessionId};
use crate::physics::{Ball, FrameTrace, ShotInput};
use crate::pipeline::{ProviderKind, RoundBundle};
use crate::report::JourneyReport;

pub use clock::{Clock, LogicalClock, SystemClock};
pub use file::FileStore;
pub use memory::MemoryStore;

pub const SCHEMA_VERSION: u32 = 1;

/// One state transition. Generation and physics results are recorded in
/// full so that replay never calls a provider or the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
#[allow(clippy::large_enum_variant)]
pub enum JournalEvent {
    SessionCreated {
        session_id: SessionId,
        profile: UserProfile,
        seed: u64,
        config: SessionConfig,
    },
    RoundGenerated {
        bundle: RoundBundle,
        provider: ProviderKind,
        attempts: u32,
        warnings: Vec<String>,
    },
    RoundRacked {
        round_index: u32,
    },
    ShotTaken {
        shot: ShotInput,
        days: u32,
        balls_after: Vec<Ball>,
        trace: FrameTrace,
    },
    EventsPocketed {
        days: u32,
        event_ids: Vec<EventId>,
    },
    DecisionResolved {
        event_id: EventId,
        accept: bool,
    },
    Terminated {
        reason: CompletionReason,
        day_elapsed: u32,
        milestones_achieved: u32,
    },
    ReportGenerated {
        report: JourneyReport,
    },
}

impl JournalEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            JournalEvent::SessionCreated { .. } => "SessionCreated",
            JournalEvent::RoundGenerated { .. } => "RoundGenerated",
            JournalEvent::RoundRacked { .. } => "RoundRacked",
            JournalEvent::ShotTaken { .. } => "ShotTaken",
            JournalEvent::EventsPocketed { .. } => "EventsPocketed",
            JournalEvent::DecisionResolved { .. } => "DecisionResolved",
            JournalEvent::Terminated { .. } => "Terminated",
            JournalEvent::ReportGenerated { .. } => "ReportGenerated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub schema_version: u32,
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub event: JournalEvent,
}

impl JournalEntry {
    pub fn new(seq: u64, timestamp: DateTime<Utc>, event: JournalEvent) -> Self {
        JournalEntry {
            schema_version: SCHEMA_VERSION,
            seq,
            timestamp,
            event,
        }
    }

    /// One NDJSON line, without the newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("journal entries serialize")
    }
}

/// `snapshot.json`: the folded session at a point in its journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub session: Session,
}

impl Snapshot {
    pub fn new(session: Session) -> Self {
        Snapshot {
            schema_version: SCHEMA_VERSION,
            session,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session {0} not found")]
    NotFound(SessionId),
    #[error("malformed session id {0:?}")]
    InvalidId(String),
    #[error("sequence conflict on {session}: expected seq {expected}, got {got}")]
    SeqConflict {
        session: SessionId,
        expected: u64,
        got: u64,
    },
    #[error("corrupt journal for {session}: {detail}")]
    Corruption { session: SessionId, detail: String },
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("storage I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("journal is empty; it must start with SessionCreated")]
    Empty,
    #[error("seq {seq}: {detail}")]
    Malformed { seq: u64, detail: String },
    #[error("seq {seq} ({kind}): {source}")]
    Transition {
        seq: u64,
        kind: &'static str,
        source: CareerError,
    },
}

/// Applies one transition. Validation happens inside the session methods, so
/// a rejected event leaves an error and a partially updated `session` that
/// the caller must discard.
pub fn apply_event(session: &mut Session, event: &JournalEvent) -> Result<(), CareerError> {
    match event {
        JournalEvent::SessionCreated { .. } => {
            return Err(CareerError::Consistency(
                "SessionCreated may only start a journal".into(),
            ));
        }
        JournalEvent::RoundGenerated { bundle, .. } => session.stage_round(bundle.clone())?,
        JournalEvent::RoundRacked { round_index } => {
            if *round_index != session.current_round {
                return Err(CareerError::Consistency(format!(
                    "racking round {round_index} while round {} is due",
                    session.current_round
                )));
            }
            session.rack_staged()?;
        }
        JournalEvent::ShotTaken {
            shot,
            days,
            balls_after,
            ..
        } => {
            shot.validate()?;
            let expected = session.drag_to_days(shot.drag_fraction);
            if expected != *days {
                return Err(CareerError::Consistency(format!(
                    "shot charged {days} days, the drag costs {expected}"
                )));
            }
            session.record_shot(balls_after.clone(), *days)?;
        }
        JournalEvent::EventsPocketed { days, event_ids } => {
            session.apply_shot_outcome(*days, event_ids)?;
        }
        JournalEvent::DecisionResolved { event_id, accept } => {
            if session.pending_decision.as_ref() != Some(event_id) {
                return Err(CareerError::Consistency(format!(
                    "decision on {event_id} but pending is {:?}",
                    session.pending_decision.as_ref().map(EventId::as_str)
                )));
            }
            session.resolve_decision(*accept)?;
        }
        JournalEvent::Terminated {
            reason,
            day_elapsed,
            milestones_achieved,
        } => {
            if (*day_elapsed, *milestones_achieved)
                != (session.day_elapsed, session.milestones_achieved)
            {
                return Err(CareerError::Consistency(
                    "termination counters disagree with the session".into(),
                ));
            }
            session.record_termination(*reason)?;
        }
        JournalEvent::ReportGenerated { report } => session.attach_report(report.clone())?,
    }
    session.journal_len += 1;
    Ok(())
}

/// Starts a session from its first journal event.
pub fn genesis(event: &JournalEvent) -> Result<Session, CareerError> {
    match event {
        JournalEvent::SessionCreated {
            session_id,
            profile,
            seed,
            config,
        } => {
            let mut session =
                Session::new(session_id.clone(), profile.clone(), *seed, config.clone())?;
            session.journal_len = 1;
            Ok(session)
        }
        other => Err(CareerError::Consistency(format!(
            "journal starts with {} instead of SessionCreated",
            other.kind()
        ))),
    }
}

/// Re-folds a whole journal.
pub fn replay(entries: &[JournalEntry]) -> Result<Session, ReplayError> {
    let first = entries.first().ok_or(ReplayError::Empty)?;
    let check_seq = |i: usize, entry: &JournalEntry| -> Result<(), ReplayError> {
        if entry.seq != i as u64 {
            return Err(ReplayError::Malformed {
                seq: entry.seq,
                detail: format!("expected seq {i}"),
            });
        }
        if entry.schema_version != SCHEMA_VERSION {
            return Err(ReplayError::Malformed {
                seq: entry.seq,
                detail: format!("unsupported schema_version {}", entry.schema_version),
            });
        }
        Ok(())
    };
    check_seq(0, first)?;
    let mut session = genesis(&first.event).map_err(|source| ReplayError::Transition {
        seq: 0,
        kind: first.event.kind(),
        source,
    })?;
    for (i, entry) in entries.iter().enumerate().skip(1) {
        check_seq(i, entry)?;
        apply_event(&mut session, &entry.event).map_err(|source| ReplayError::Transition {
            seq: entry.seq,
            kind: entry.event.kind(),
            source,
        })?;
    }
    Ok(session)
}

/// Parses NDJSON journal text. A line that fails to parse (for example a
/// write cut short) is reported with its line number.
pub fn parse_journal(text: &str) -> Result<Vec<JournalEntry>, ReplayError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| ReplayError::Malformed {
                seq: i as u64,
                detail: format!("line {} is not a journal entry: {e}", i + 1),
            })
        })
        .collect()
}

/// Persistence for journals and snapshots. Appends are durable on return.
pub trait SessionStore: Send + Sync {
    /// Appends `entry`; its seq must be exactly one past the last entry (0 for a new session).
    fn append(&self, session: &SessionId, entry: &JournalEntry) -> Result<u64, StoreError>;

    fn save_snapshot(&self, session: &Session) -> Result<(), StoreError>;

    /// Raw NDJSON journal text.
    fn journal_text(&self, session: &SessionId) -> Result<String, StoreError>;

    fn snapshot_text(&self, session: &SessionId) -> Result<String, StoreError>;

    fn list(&self) -> Result<Vec<SessionId>, StoreError>;

    fn journal(&self, session: &SessionId) -> Result<Vec<JournalEntry>, StoreError> {
        let text = self.journal_text(session)?;
        parse_journal(&text).map_err(|e| StoreError::Corruption {
            session: session.clone(),
            detail: e.to_string(),
        })
    }

    /// Loads the snapshot and verifies it against a fresh fold of the journal.
    fn load(&self, session: &SessionId) -> Result<(Session, Vec<JournalEntry>), StoreError> {
        let entries = self.journal(session)?;
        let folded = replay(&entries).map_err(|e| StoreError::Corruption {
            session: session.clone(),
            detail: e.to_string(),
        })?;
        let snapshot: Snapshot =
            serde_json::from_str(&self.snapshot_text(session)?).map_err(|e| {
                StoreError::Corruption {
                    session: session.clone(),
                    detail: format!("unreadable snapshot: {e}"),
                }
            })?;
        if snapshot.schema_version != SCHEMA_VERSION || snapshot.session != folded {
            return Err(StoreError::Corruption {
                session: session.clone(),
                detail: format!(
                    "snapshot at journal length {} diverges from the fold of {} entries",
                    snapshot.session.journal_len,
                    entries.len()
                ),
            });
        }
        Ok((folded, entries))
    }
}

pub(crate) fn snapshot_json(session: &Session) -> String {
    serde_json::to_string_pretty(&Snapshot::new(session.clone())).expect("snapshots serialize")
}

#[cfg(test)]
pub(crate) mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::career::UserProfile;

    pub fn created(seed: u64) -> JournalEvent {
        JournalEvent::SessionCreated {
            session_id: SessionId::from_seed(seed),
            profile: UserProfile {
                intro: "I study HCI.".into(),
                goal: "Start a PhD.".into(),
                start_date: NaiveDate::from_ymd_opt(2024, 10, 28).unwrap(),
            },
            seed,
            config: SessionConfig::default(),
        }
    }

    fn at(seq: u64) -> DateTime<Utc> {
        LogicalClock::default().timestamp(seq)
    }

    #[test]
    fn entry_line_shape() {
        let entry = JournalEntry::new(0, at(0), created(7));
        let value: serde_json::Value = serde_json::from_str(&entry.to_line()).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["seq"], 0);
        assert_eq!(value["kind"], "SessionCreated");
        assert_eq!(value["payload"]["seed"], 7);
        let back: JournalEntry = serde_json::from_str(&entry.to_line()).unwrap();
        assert_eq!(back, entry);
    }

    #[test]
    fn empty_and_headless_journals_rejected() {
        assert_eq!(replay(&[]), Err(ReplayError::Empty));
        let racked = JournalEntry::new(0, at(0), JournalEvent::RoundRacked { round_index: 1 });
        assert!(matches!(
            replay(&[racked]),
            Err(ReplayError::Transition { seq: 0, .. })
        ));
    }

    #[test]
    fn decision_without_pending_names_seq() {
        let entries = vec![
            JournalEntry::new(0, at(0), created(1)),
            JournalEntry::new(
                1,
                at(1),
                JournalEvent::DecisionResolved {
                    event_id: EventId::new("r1-random-3"),
                    accept: true,
                },
            ),
        ];
        match replay(&entries) {
            Err(ReplayError::Transition { seq, kind, .. }) => {
                assert_eq!((seq, kind), (1, "DecisionResolved"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seq_gap_rejected() {
        let entries = vec![
            JournalEntry::new(0, at(0), created(1)),
            JournalEntry::new(2, at(2), JournalEvent::RoundRacked { round_index: 1 }),
        ];
        assert!(matches!(
            replay(&entries),
            Err(ReplayError::Malformed { seq: 2, .. })
        ));
    }

    #[test]
    fn truncated_line_is_malformed() {
        let line = JournalEntry::new(0, at(0), created(1)).to_line();
        let text = format!("{line}\n{}", &line[..line.len() / 2]);
        assert!(matches!(
            parse_journal(&text),
            Err(ReplayError::Malformed { .. })
        ));
        assert_eq!(parse_journal(&format!("{line}\n")).unwrap().len(), 1);
    }

    fn shot_entry(seq: u64) -> JournalEntry {
        JournalEntry::new(
            seq,
            at(seq),
            JournalEvent::ShotTaken {
                shot: ShotInput {
                    direction: crate::physics::Vec2::UNIT_X,
                    drag_fraction: 0.01,
                },
                days: 1,
                balls_after: Vec::new(),
                trace: FrameTrace::default(),
            },
        )
    }

    fn bulk_append(store: &dyn SessionStore) {
        let id = SessionId::from_seed(5);
        assert_eq!(
            store
                .append(&id, &JournalEntry::new(0, at(0), created(5)))
                .unwrap(),
            0
        );
        for seq in 1..=730 {
            assert_eq!(store.append(&id, &shot_entry(seq)).unwrap(), seq);
        }
        let seqs: Vec<u64> = store.journal(&id).unwrap().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, (0..=730).collect::<Vec<_>>());
        assert!(matches!(
            store.append(&id, &shot_entry(730)),
            Err(StoreError::SeqConflict {
                expected: 731,
                got: 730,
                ..
            })
        ));
        assert!(matches!(
            store.append(&id, &shot_entry(900)),
            Err(StoreError::SeqConflict { .. })
        ));
        let other = SessionId::from_seed(6);
        assert!(matches!(
            store.append(&other, &shot_entry(3)),
            Err(StoreError::NotFound(_)) | Err(StoreError::SeqConflict { .. })
        ));
    }

    #[test]
    fn memory_store_bulk_append() {
        bulk_append(&MemoryStore::new());
    }

    #[test]
    fn file_store_bulk_append() {
        let dir = tempfile::tempdir().unwrap();
        bulk_append(&FileStore::open(dir.path()).unwrap().without_fsync());
        // Sequence state survives reopening.
        let store = FileStore::open(dir.path()).unwrap();
        assert!(store
            .append(&SessionId::from_seed(5), &shot_entry(731))
            .is_ok());
    }
}
