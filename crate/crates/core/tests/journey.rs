use std::time::Instant;

use chrono::NaiveDate;
use cuepath_core::career::{CompletionReason, SessionConfig, SessionStatus, UserProfile};
use cuepath_core::driver::{run_session, RunOptions};
use cuepath_core::engine::Engine;
use cuepath_core::ids::SessionId;
use cuepath_core::pipeline::TemplateProvider;
use cuepath_core::store::{replay, FileStore, LogicalClock, MemoryStore, SessionStore, StoreError};

fn profile() -> UserProfile {
    UserProfile {
        intro: "I am a first-year master's student majoring in HCI.".into(),
        goal: "I hope to become a PhD student in two years.".into(),
        start_date: NaiveDate::from_ymd_opt(2024, 10, 28).unwrap(),
    }
}

fn play(store: &dyn SessionStore, seed: u64) -> cuepath_core::driver::RunSummary {
    let clock = LogicalClock::default();
    let engine = Engine::new(store, &clock);
    let session = engine
        .create(
            SessionId::from_seed(seed),
            profile(),
            seed,
            SessionConfig::default(),
        )
        .unwrap();
    run_session(
        &engine,
        &TemplateProvider,
        session,
        &[],
        &RunOptions::default(),
    )
    .unwrap()
}

#[test]
fn auto_policy_run_completes_and_replays() {
    let start = Instant::now();
    let store = MemoryStore::new();
    let run = play(&store, 7);
    let s = &run.session;
    assert_eq!(s.status, SessionStatus::Completed);
    assert!(s.day_elapsed <= 730 && s.milestones_achieved <= 6);
    if s.completion_reason == Some(CompletionReason::SixMilestones) {
        assert_eq!(s.milestones_achieved, 6);
    }
    assert!(run.shots <= 730);
    assert!(run.report.is_some());
    s.check_invariants().unwrap();

    let journal = store.journal(&s.id).unwrap();
    let replayed = replay(&journal).unwrap();
    assert_eq!(
        serde_json::to_string(&replayed).unwrap(),
        serde_json::to_string(s).unwrap()
    );
    let (loaded, _) = store.load(&s.id).unwrap();
    assert_eq!(&loaded, s);
    eprintln!(
        "run took {:?}, {} journal bytes",
        start.elapsed(),
        store.journal_text(&s.id).unwrap().len()
    );
}

#[test]
fn same_seed_gives_identical_journals() {
    let a = MemoryStore::new();
    let b = MemoryStore::new();
    let id = play(&a, 11).session.id;
    play(&b, 11);
    assert_eq!(a.journal_text(&id).unwrap(), b.journal_text(&id).unwrap());
}

#[test]
fn file_store_round_trip_and_faults() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap().without_fsync();
    let run = play(&store, 3);
    let id = run.session.id.clone();
    let (loaded, entries) = store.load(&id).unwrap();
    assert_eq!(loaded, run.session);
    assert_eq!(entries.len() as u64, run.session.journal_len);
    assert_eq!(store.list().unwrap(), vec![id.clone()]);

    // A fresh handle on the same directory sees the same data.
    let reopened = FileStore::open(dir.path()).unwrap();
    assert_eq!(reopened.load(&id).unwrap().0, run.session);

    assert!(matches!(
        store.load(&SessionId("nope".into())),
        Err(StoreError::NotFound(_))
    ));
    assert!(matches!(
        store.load(&SessionId("../etc".into())),
        Err(StoreError::InvalidId(_))
    ));

    let journal = dir.path().join(id.as_str()).join("journal.ndjson");
    let text = std::fs::read_to_string(&journal).unwrap();
    std::fs::write(&journal, &text[..text.len() - 40]).unwrap();
    assert!(matches!(
        FileStore::open(dir.path()).unwrap().load(&id),
        Err(StoreError::Corruption { .. })
    ));

    // Dropping whole trailing lines leaves a valid journal that no longer matches the snapshot.
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    std::fs::write(&journal, lines.join("\n") + "\n").unwrap();
    assert!(matches!(
        FileStore::open(dir.path()).unwrap().load(&id),
        Err(StoreError::Corruption { .. })
    ));
}
