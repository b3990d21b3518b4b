//! The journaled session engine shared by the HTTP service and the CLI.
//!
//! Every mutation goes through [`Engine::commit`]: the event is applied to a
//! copy of the session, appended to the store, and only then swapped in.

use thiserror::Error;

use crate::career::{
    CareerError, CareerEvent, DecisionRecord, Session, SessionConfig, SessionStatus, ShotOutcome,
    UserProfile,
};
use crate::ids::{EventId, SessionId};
use crate::physics::{apply_shot, simulate_until_rest, FrameTrace, ShotInput};
use crate::pipeline::{
    generate_round, GeneratedRound, GenerationContext, GenerationError, GenerationPolicy, Provider,
    ProviderKind,
};
use crate::report::{generate_report, JourneyReport, ReportError};
use crate::store::{
    apply_event, genesis, Clock, JournalEntry, JournalEvent, SessionStore, StoreError,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Career(#[from] CareerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("round generation failed: {0}")]
    Generation(#[from] GenerationError),
    #[error("report generation failed: {0}")]
    Report(#[from] ReportError),
}

impl EngineError {
    pub fn is_illegal_state(&self) -> bool {
        matches!(self, EngineError::Career(CareerError::IllegalState { .. }))
    }
}

/// Result of one shot, with the full-rate trace and the revealed events.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub shot: ShotInput,
    pub days_charged: u32,
    pub trace: FrameTrace,
    pub pocketed: Vec<CareerEvent>,
    pub outcome: ShotOutcome,
}

pub struct Engine<'a> {
    store: &'a dyn SessionStore,
    clock: &'a dyn Clock,
}

impl<'a> Engine<'a> {
    pub fn new(store: &'a dyn SessionStore, clock: &'a dyn Clock) -> Self {
        Engine { store, clock }
    }

    pub fn store(&self) -> &dyn SessionStore {
        self.store
    }

    pub fn create(
        &self,
        id: SessionId,
        profile: UserProfile,
        seed: u64,
        config: SessionConfig,
    ) -> Result<Session, EngineError> {
        let event = JournalEvent::SessionCreated {
            session_id: id.clone(),
            profile,
            seed,
            config,
        };
        let session = genesis(&event)?;
        self.store
            .append(&id, &JournalEntry::new(0, self.clock.timestamp(0), event))?;
        self.store.save_snapshot(&session)?;
        Ok(session)
    }

    /// Validates `event` against a copy of the session, journals it, then
    /// installs the new state.
    pub fn commit(&self, session: &mut Session, event: JournalEvent) -> Result<(), EngineError> {
        let mut next = session.clone();
        apply_event(&mut next, &event)?;
        let seq = session.journal_len;
        self.store.append(
            &session.id,
            &JournalEntry::new(seq, self.clock.timestamp(seq), event),
        )?;
        self.store.save_snapshot(&next)?;
        *session = next;
        Ok(())
    }

    /// Journals a generated round and racks it.
    pub fn commit_round(
        &self,
        session: &mut Session,
        generated: GeneratedRound,
        provider: ProviderKind,
    ) -> Result<(), EngineError> {
        let round_index = generated.bundle.round_index;
        self.commit(
            session,
            JournalEvent::RoundGenerated {
                bundle: generated.bundle,
                provider,
                attempts: generated.attempts,
                warnings: generated.warnings,
            },
        )?;
        self.commit(session, JournalEvent::RoundRacked { round_index })
    }

    /// Generates and racks the next round when one is due. Returns whether a round was racked.
    pub fn advance_round(
        &self,
        session: &mut Session,
        provider: &dyn Provider,
        policy: &GenerationPolicy,
    ) -> Result<bool, EngineError> {
        if session.status != SessionStatus::AwaitingRound {
            return Ok(false);
        }
        let ctx = GenerationContext::from_session(session);
        let generated = generate_round(provider, &ctx, session.rng_seed, policy)?;
        self.commit_round(session, generated, provider.kind())?;
        Ok(true)
    }

    /// Strikes the cue, simulates to rest and journals the physics and its outcome.
    pub fn shoot(&self, session: &mut Session, shot: ShotInput) -> Result<ShotResult, EngineError> {
        if session.status != SessionStatus::Active {
            return Err(CareerError::IllegalState {
                expected: "Active",
                actual: session.status,
            }
            .into());
        }
        shot.validate().map_err(CareerError::from)?;
        let days = session.drag_to_days(shot.drag_fraction);
        let table = session.config.table.clone();
        let struck = apply_shot(&table, &session.balls, &shot).map_err(CareerError::from)?;
        let (balls_after, trace) =
            simulate_until_rest(&table, &struck).map_err(CareerError::from)?;

        let mut event_ids: Vec<EventId> = Vec::new();
        for capture in &trace.pocket_events {
            let event_id = session
                .ball(capture.ball_id)
                .and_then(|b| b.event_id.clone());
            if let Some(id) = event_id {
                if !event_ids.contains(&id) {
                    event_ids.push(id);
                }
            }
        }

        self.commit(
            session,
            JournalEvent::ShotTaken {
                shot,
                days,
                balls_after,
                trace: trace.clone(),
            },
        )?;
        let mut preview = session.clone();
        let outcome = preview.apply_shot_outcome(days, &event_ids)?;
        self.commit(
            session,
            JournalEvent::EventsPocketed {
                days,
                event_ids: event_ids.clone(),
            },
        )?;
        if let Some(reason) = outcome.completed {
            self.commit(
                session,
                JournalEvent::Terminated {
                    reason,
                    day_elapsed: session.day_elapsed,
                    milestones_achieved: session.milestones_achieved,
                },
            )?;
        }
        let pocketed = event_ids
            .iter()
            .filter_map(|id| session.event(id).cloned())
            .collect();
        Ok(ShotResult {
            shot,
            days_charged: days,
            trace,
            pocketed,
            outcome,
        })
    }

    pub fn decide(
        &self,
        session: &mut Session,
        accept: bool,
    ) -> Result<DecisionRecord, EngineError> {
        let event_id = match (&session.status, &session.pending_decision) {
            (SessionStatus::AwaitingDecision, Some(id)) => id.clone(),
            _ => {
                return Err(CareerError::IllegalState {
                    expected: "AwaitingDecision",
                    actual: session.status,
                }
                .into());
            }
        };
        self.commit(session, JournalEvent::DecisionResolved { event_id, accept })?;
        Ok(session
            .decisions
            .last()
            .cloned()
            .expect("decision just recorded"))
    }

    /// Returns the cached report, generating and journaling it on first use.
    pub fn report(
        &self,
        session: &mut Session,
        provider: &dyn Provider,
        policy: &GenerationPolicy,
    ) -> Result<JourneyReport, EngineError> {
        if let Some(report) = &session.report {
            return Ok(report.clone());
        }
        let report = generate_report(provider, session, policy.retry_budget, policy.temperature)?;
        self.commit(
            session,
            JournalEvent::ReportGenerated {
                report: report.clone(),
            },
        )?;
        Ok(report)
    }
}
