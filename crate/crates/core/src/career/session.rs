use serde::{Deserialize, Serialize};

use super::rack::rack_layout;
use super::{
    CareerError, CareerEvent, CompletionReason, DayCostRule, DirectionChange, EventCategory,
    EventStatus, SentimentLabel, SessionLimits, SessionStatus, UserProfile,
};
use crate::ids::{BallId, EventId, SessionId};
use crate::physics::{Ball, BallKind, BallState, Table};
use crate::pipeline::{validate_round, ProviderKind, RoundBundle};
use crate::report::JourneyReport;

/// Fixed per-session configuration, recorded when the session is created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub table: Table,
    pub day_rule: DayCostRule,
    pub limits: SessionLimits,
    pub provider: ProviderKind,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            table: Table::default(),
            day_rule: DayCostRule::default(),
            limits: SessionLimits::default(),
            provider: ProviderKind::Template,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub event_id: EventId,
    pub day: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub event_id: EventId,
    pub change: DirectionChange,
    pub accepted: bool,
}

/// What a shot's outcome did to the session.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub days_charged: u32,
    pub pocketed: Vec<EventId>,
    pub milestone_pocketed: bool,
    pub decisions_opened: usize,
    pub completed: Option<CompletionReason>,
}

/// One player's run, from profile entry to the journey report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub profile: UserProfile,
    pub rng_seed: u64,
    pub config: SessionConfig,
    pub day_elapsed: u32,
    pub milestones_achieved: u32,
    pub current_round: u32,
    pub rounds: Vec<RoundBundle>,
    /// Generated but not yet racked.
    pub staged_round: Option<RoundBundle>,
    pub balls: Vec<Ball>,
    pub next_ball_id: u32,
    pub timeline: Vec<TimelineEntry>,
    pub accepted_changes: Vec<DirectionChange>,
    pub pending_decision: Option<EventId>,
    /// Further change events pocketed in the same shot, resolved FIFO after the pending one.
    pub queued_decisions: Vec<EventId>,
    /// Status to restore once every decision is resolved.
    pub resume_status: Option<SessionStatus>,
    pub decisions: Vec<DecisionRecord>,
    pub status: SessionStatus,
    pub completion_reason: Option<CompletionReason>,
    pub shots_taken: u32,
    /// Days of a shot whose physics is recorded but whose outcome is not yet applied.
    pub in_flight_days: Option<u32>,
    pub termination_recorded: bool,
    pub report: Option<JourneyReport>,
    /// Number of journal entries folded into this state.
    pub journal_len: u64,
}

const CUE_ID: BallId = BallId(0);

impl Session {
    pub fn new(
        id: SessionId,
        profile: UserProfile,
        seed: u64,
        config: SessionConfig,
    ) -> Result<Self, CareerError> {
        profile.validate()?;
        config.table.validate()?;
        config.day_rule.validate()?;
        if config.limits.max_days == 0 || config.limits.max_milestones == 0 {
            return Err(CareerError::Validation(
                "session limits must be positive".into(),
            ));
        }
        let cue = Ball::cue(CUE_ID, config.table.head_spot());
        Ok(Session {
            id,
            profile,
            rng_seed: seed,
            config,
            day_elapsed: 0,
            milestones_achieved: 0,
            current_round: 1,
            rounds: Vec::new(),
            staged_round: None,
            balls: vec![cue],
            next_ball_id: 1,
            timeline: Vec::new(),
            accepted_changes: Vec::new(),
            pending_decision: None,
            queued_decisions: Vec::new(),
            resume_status: None,
            decisions: Vec::new(),
            status: SessionStatus::AwaitingRound,
            completion_reason: None,
            shots_taken: 0,
            in_flight_days: None,
            termination_recorded: false,
            report: None,
            journal_len: 0,
        })
    }

    pub fn table(&self) -> &Table {
        &self.config.table
    }

    pub fn days_remaining(&self) -> u32 {
        self.config.limits.max_days.saturating_sub(self.day_elapsed)
    }

    pub fn is_completed(&self) -> bool {
        self.status == SessionStatus::Completed
    }

    /// Days the given drag would cost right now.
    pub fn drag_to_days(&self, drag_fraction: f64) -> u32 {
        self.config
            .day_rule
            .drag_to_days(drag_fraction, self.days_remaining().max(1))
    }

    pub fn events(&self) -> impl Iterator<Item = &CareerEvent> {
        self.rounds.iter().flat_map(|r| r.events())
    }

    pub fn event(&self, id: &EventId) -> Option<&CareerEvent> {
        self.events().find(|e| &e.id == id)
    }

    fn event_mut(&mut self, id: &EventId) -> Option<&mut CareerEvent> {
        self.rounds
            .iter_mut()
            .flat_map(|r| r.events_mut())
            .find(|e| &e.id == id)
    }

    pub fn ball(&self, id: BallId) -> Option<&Ball> {
        self.balls.iter().find(|b| b.id == id)
    }

    pub fn cue(&self) -> Option<&Ball> {
        self.balls.iter().find(|b| b.kind == BallKind::Cue)
    }

    pub fn current_bundle(&self) -> Option<&RoundBundle> {
        self.rounds.last()
    }

    /// Events in the order they were pocketed.
    pub fn pocketed_events(&self) -> Vec<&CareerEvent> {
        self.timeline
            .iter()
            .filter_map(|t| self.event(&t.event_id))
            .collect()
    }

    fn require(&self, expected: SessionStatus, name: &'static str) -> Result<(), CareerError> {
        if self.status != expected {
            return Err(CareerError::IllegalState {
                expected: name,
                actual: self.status,
            });
        }
        Ok(())
    }

    /// Holds a generated round until it is racked.
    pub fn stage_round(&mut self, bundle: RoundBundle) -> Result<(), CareerError> {
        self.require(SessionStatus::AwaitingRound, "AwaitingRound")?;
        if bundle.round_index != self.current_round {
            return Err(CareerError::Consistency(format!(
                "generated round {} while round {} is due",
                bundle.round_index, self.current_round
            )));
        }
        if self.staged_round.is_some() {
            return Err(CareerError::Consistency(format!(
                "round {} is already staged",
                self.current_round
            )));
        }
        self.staged_round = Some(bundle);
        Ok(())
    }

    /// Racks the staged round.
    pub fn rack_staged(&mut self) -> Result<&[Ball], CareerError> {
        let bundle = self
            .staged_round
            .clone()
            .ok_or_else(|| CareerError::Consistency("no generated round to rack".into()))?;
        self.rack_round(bundle)
    }

    /// Marks the completion as journaled; allowed once.
    pub fn record_termination(&mut self, reason: CompletionReason) -> Result<(), CareerError> {
        self.require(SessionStatus::Completed, "Completed")?;
        if self.completion_reason != Some(reason) {
            return Err(CareerError::Consistency(format!(
                "termination reason {reason:?} disagrees with {:?}",
                self.completion_reason
            )));
        }
        if self.termination_recorded {
            return Err(CareerError::Consistency(
                "termination already recorded".into(),
            ));
        }
        self.termination_recorded = true;
        Ok(())
    }

    /// Attaches the journey report; allowed once, after completion.
    pub fn attach_report(&mut self, report: JourneyReport) -> Result<(), CareerError> {
        self.require(SessionStatus::Completed, "Completed")?;
        if self.report.is_some() {
            return Err(CareerError::Consistency("report already generated".into()));
        }
        self.report = Some(report);
        Ok(())
    }

    /// Places a freshly generated round on the table.
    ///
    /// Event balls still on the table from earlier rounds are discarded, the
    /// cue returns to the head spot, and the seven new balls take the seeded
    /// rack layout.
    pub fn rack_round(&mut self, bundle: RoundBundle) -> Result<&[Ball], CareerError> {
        self.require(SessionStatus::AwaitingRound, "AwaitingRound")?;
        if bundle.round_index != self.current_round {
            return Err(CareerError::Consistency(format!(
                "bundle is for round {}, session expects round {}",
                bundle.round_index, self.current_round
            )));
        }
        let check = validate_round(&bundle);
        if check.has_hard() {
            return Err(CareerError::InvalidBundle(
                check.hard().map(|v| v.to_string()).collect(),
            ));
        }
        if bundle
            .events()
            .any(|e| e.status != EventStatus::OnTable || self.event(&e.id).is_some())
        {
            return Err(CareerError::Consistency(
                "bundle events must be fresh".into(),
            ));
        }

        for round in &mut self.rounds {
            for event in round.events_mut() {
                if event.status == EventStatus::OnTable {
                    event.status = EventStatus::Discarded;
                }
            }
        }

        let table = self.config.table.clone();
        let (slots, order) = rack_layout(&table, self.rng_seed, bundle.round_index);
        let mut balls = vec![Ball::cue(CUE_ID, table.head_spot())];
        let mut next_id = self.next_ball_id;
        let mut take_id = || {
            let id = BallId(next_id);
            next_id += 1;
            id
        };
        balls.push(Ball::event(
            take_id(),
            BallKind::Milestone,
            slots[0],
            bundle.milestone.id.clone(),
        ));
        let others: Vec<(BallKind, EventId)> = bundle
            .randoms
            .iter()
            .map(|e| (BallKind::Random, e.id.clone()))
            .chain(
                bundle
                    .skills
                    .iter()
                    .map(|e| (BallKind::Skill, e.id.clone())),
            )
            .collect();
        for (slot, &which) in order.iter().enumerate() {
            let (kind, event_id) = others[which].clone();
            balls.push(Ball::event(take_id(), kind, slots[slot + 1], event_id));
        }
        self.next_ball_id = next_id;
        self.balls = balls;
        self.rounds.push(bundle);
        self.staged_round = None;
        self.status = SessionStatus::Active;
        Ok(&self.balls)
    }

    /// Records the physical result of a shot: the table after it came to
    /// rest. The outcome is applied separately by [`Session::apply_shot_outcome`].
    pub fn record_shot(&mut self, balls_after: Vec<Ball>, days: u32) -> Result<(), CareerError> {
        self.require(SessionStatus::Active, "Active")?;
        if self.in_flight_days.is_some() {
            return Err(CareerError::Consistency(
                "previous shot outcome not applied".into(),
            ));
        }
        if days == 0 {
            return Err(CareerError::Validation(
                "a shot costs at least one day".into(),
            ));
        }
        let mut before: Vec<BallId> = self.balls.iter().map(|b| b.id).collect();
        let mut after: Vec<BallId> = balls_after.iter().map(|b| b.id).collect();
        before.sort_unstable();
        after.sort_unstable();
        if before != after {
            return Err(CareerError::Consistency(
                "shot changed the set of balls".into(),
            ));
        }
        self.balls = balls_after;
        self.in_flight_days = Some(days);
        self.shots_taken += 1;
        Ok(())
    }

    /// Charges the shot's days and collects the pocketed events, in pocket order.
    pub fn apply_shot_outcome(
        &mut self,
        shot_days: u32,
        pocketed: &[EventId],
    ) -> Result<ShotOutcome, CareerError> {
        self.require(SessionStatus::Active, "Active")?;
        if shot_days == 0 {
            return Err(CareerError::Validation(
                "a shot costs at least one day".into(),
            ));
        }
        if let Some(expected) = self.in_flight_days {
            if expected != shot_days {
                return Err(CareerError::Consistency(format!(
                    "outcome charges {shot_days} days but the shot cost {expected}"
                )));
            }
        }
        for (i, id) in pocketed.iter().enumerate() {
            let event = self
                .event(id)
                .ok_or_else(|| CareerError::Consistency(format!("unknown event {id}")))?;
            if event.status != EventStatus::OnTable || event.round_index != self.current_round {
                return Err(CareerError::Consistency(format!(
                    "event {id} is not on the table"
                )));
            }
            if pocketed[..i].contains(id) {
                return Err(CareerError::Consistency(format!(
                    "event {id} pocketed twice"
                )));
            }
        }

        self.in_flight_days = None;
        self.day_elapsed = (self.day_elapsed + shot_days).min(self.config.limits.max_days);
        let day = self.day_elapsed;
        let mut outcome = ShotOutcome {
            days_charged: shot_days,
            ..Default::default()
        };
        let mut decisions = Vec::new();
        for id in pocketed {
            let event = self.event_mut(id).expect("checked above");
            event.status = EventStatus::Pocketed;
            event.pocketed_on_day = Some(day);
            match (&event.category, &event.label) {
                (EventCategory::Milestone, _) => outcome.milestone_pocketed = true,
                (EventCategory::Random, Some(label)) if label.is_change() => {
                    decisions.push(id.clone())
                }
                _ => {}
            }
            for ball in self
                .balls
                .iter_mut()
                .filter(|b| b.event_id.as_ref() == Some(id))
            {
                ball.state = BallState::Pocketed;
                ball.velocity = crate::physics::Vec2::ZERO;
            }
            self.timeline.push(TimelineEntry {
                event_id: id.clone(),
                day,
            });
            outcome.pocketed.push(id.clone());
        }

        if outcome.milestone_pocketed {
            self.milestones_achieved =
                (self.milestones_achieved + 1).min(self.config.limits.max_milestones);
        }
        let next = if outcome.milestone_pocketed {
            SessionStatus::AwaitingRound
        } else {
            SessionStatus::Active
        };
        outcome.decisions_opened = decisions.len();
        if decisions.is_empty() {
            self.status = next;
        } else {
            self.pending_decision = Some(decisions.remove(0));
            self.queued_decisions = decisions;
            self.resume_status = Some(next);
            self.status = SessionStatus::AwaitingDecision;
        }

        if self.check_termination() {
            outcome.completed = self.completion_reason;
        } else if outcome.milestone_pocketed {
            self.current_round += 1;
        }
        Ok(outcome)
    }

    /// Resolves the pending change event. Accepting records the new direction
    /// so later rounds build on it.
    pub fn resolve_decision(&mut self, accept: bool) -> Result<DecisionRecord, CareerError> {
        self.require(SessionStatus::AwaitingDecision, "AwaitingDecision")?;
        let event_id = self.pending_decision.clone().ok_or_else(|| {
            CareerError::Consistency("awaiting a decision with none pending".into())
        })?;
        let change = match self.event(&event_id).and_then(|e| e.label.clone()) {
            Some(SentimentLabel::Change {
                change_from,
                change_to,
            }) => DirectionChange {
                from: change_from,
                to: change_to,
            },
            _ => {
                return Err(CareerError::Consistency(format!(
                    "{event_id} is not a change event"
                )))
            }
        };
        if accept {
            self.accepted_changes.push(change.clone());
        }
        let record = DecisionRecord {
            event_id,
            change,
            accepted: accept,
        };
        self.decisions.push(record.clone());
        if self.queued_decisions.is_empty() {
            self.pending_decision = None;
            self.status = self.resume_status.take().unwrap_or(SessionStatus::Active);
        } else {
            self.pending_decision = Some(self.queued_decisions.remove(0));
        }
        Ok(record)
    }

    /// Completes the run once six milestones are collected or the day budget
    /// is spent (milestones take precedence). Returns whether it just completed.
    pub fn check_termination(&mut self) -> bool {
        if self.status == SessionStatus::Completed {
            return false;
        }
        let limits = self.config.limits;
        let reason = if self.milestones_achieved >= limits.max_milestones {
            CompletionReason::SixMilestones
        } else if self.day_elapsed >= limits.max_days {
            CompletionReason::DaysExhausted
        } else {
            return false;
        };
        self.status = SessionStatus::Completed;
        self.completion_reason = Some(reason);
        // Open decisions are moot once the run is over.
        self.pending_decision = None;
        self.queued_decisions.clear();
        self.resume_status = None;
        self.staged_round = None;
        true
    }

    /// Hover text for an on-table ball: the hint for skills and randoms, the
    /// title for milestones, nothing for the cue. Never the label or body.
    pub fn visible_hint(&self, ball_id: BallId) -> Result<String, CareerError> {
        let ball = self
            .ball(ball_id)
            .ok_or_else(|| CareerError::NotFound(ball_id.to_string()))?;
        if !ball.on_table() {
            return Err(CareerError::NotVisible(ball_id));
        }
        let Some(event_id) = &ball.event_id else {
            return Ok(String::new());
        };
        let event = self.event(event_id).ok_or_else(|| {
            CareerError::Consistency(format!(
                "ball {ball_id} references unknown event {event_id}"
            ))
        })?;
        Ok(match event.category {
            EventCategory::Milestone => event.title.clone(),
            EventCategory::Skill | EventCategory::Random => event.hint.clone().unwrap_or_default(),
        })
    }

    /// Checks every structural invariant; used by tests and on load.
    pub fn check_invariants(&self) -> Result<(), String> {
        let limits = self.config.limits;
        if self.day_elapsed > limits.max_days {
            return Err(format!(
                "day_elapsed {} exceeds {}",
                self.day_elapsed, limits.max_days
            ));
        }
        if self.milestones_achieved > limits.max_milestones {
            return Err("milestone count exceeds the cap".into());
        }
        let should_complete = self.milestones_achieved >= limits.max_milestones
            || self.day_elapsed >= limits.max_days;
        if should_complete != (self.status == SessionStatus::Completed) {
            return Err(format!(
                "status {} inconsistent with termination rule",
                self.status
            ));
        }
        if self.pending_decision.is_some() != (self.status == SessionStatus::AwaitingDecision) {
            return Err("pending decision must exist exactly when awaiting a decision".into());
        }
        if self.timeline.windows(2).any(|w| w[0].day > w[1].day) {
            return Err("timeline days decrease".into());
        }
        let pocketed = self
            .events()
            .filter(|e| e.status == EventStatus::Pocketed)
            .count();
        if pocketed != self.timeline.len() {
            return Err(format!(
                "timeline has {} entries, {} events pocketed",
                self.timeline.len(),
                pocketed
            ));
        }
        for event in self.events() {
            event.check_invariants()?;
        }
        let milestones = self
            .events()
            .filter(|e| e.category == EventCategory::Milestone && e.status == EventStatus::Pocketed)
            .count();
        if milestones as u32 != self.milestones_achieved {
            return Err("milestone counter disagrees with pocketed milestones".into());
        }
        let table = &self.config.table;
        for ball in &self.balls {
            if (ball.kind == BallKind::Cue) != ball.event_id.is_none() {
                return Err(format!(
                    "{}: cue has no event, every other ball has one",
                    ball.id
                ));
            }
            match ball.state {
                BallState::OnTable if !table.contains_ball_center(ball.position) => {
                    return Err(format!("{} outside the table", ball.id));
                }
                BallState::Pocketed | BallState::Discarded
                    if ball.velocity != crate::physics::Vec2::ZERO =>
                {
                    return Err(format!("{} off the table but moving", ball.id));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
