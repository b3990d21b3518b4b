//! The career session state machine: what each ball means, how shots spend
//! days, how rounds are racked and retired, decision events, and the
//! six-milestone / 730-day termination rule.

mod rack;
mod session;

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{BallId, EventId};
use crate::physics::PhysicsError;

pub use rack::{rack_layout, RACK_SLOTS};
pub use session::{DecisionRecord, Session, SessionConfig, ShotOutcome, TimelineEntry};

pub const DEFAULT_MAX_DAYS: u32 = 730;
pub const DEFAULT_MAX_MILESTONES: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CareerError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("illegal state: expected {expected}, session is {actual}")]
    IllegalState {
        expected: &'static str,
        actual: SessionStatus,
    },
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0} is not on the table")]
    NotVisible(BallId),
    #[error("round bundle rejected: {}", .0.join("; "))]
    InvalidBundle(Vec<String>),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Hidden outcome of a random event, revealed when the ball is pocketed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum SentimentLabel {
    Positive,
    Neutral,
    Negative,
    Change {
        change_from: String,
        change_to: String,
    },
}

impl SentimentLabel {
    pub const VARIANT_NAMES: [&'static str; 4] = ["Positive", "Neutral", "Negative", "Change"];

    pub fn change(from: impl Into<String>, to: impl Into<String>) -> Self {
        SentimentLabel::Change {
            change_from: from.into(),
            change_to: to.into(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            SentimentLabel::Positive => "Positive",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Change { .. } => "Change",
        }
    }

    pub fn is_change(&self) -> bool {
        matches!(self, SentimentLabel::Change { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        if let SentimentLabel::Change {
            change_from,
            change_to,
        } = self
        {
            if change_from.trim().is_empty() || change_to.trim().is_empty() {
                return Err("change label needs non-empty from and to".into());
            }
        }
        Ok(())
    }
}

/// Bracket content as it appears in event strings, e.g. `Change: HCI → AR/VR`.
impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentimentLabel::Change {
                change_from,
                change_to,
            } => {
                write!(f, "Change: {change_from} → {change_to}")
            }
            other => f.write_str(other.variant_name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventCategory {
    Milestone,
    Random,
    Skill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventStatus {
    OnTable,
    Pocketed,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerEvent {
    pub id: EventId,
    pub round_index: u32,
    pub category: EventCategory,
    pub title: String,
    pub body: String,
    pub label: Option<SentimentLabel>,
    pub hint: Option<String>,
    pub status: EventStatus,
    pub pocketed_on_day: Option<u32>,
    /// Scene prompt for milestone artwork; rendering happens elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_prompt: Option<String>,
}

impl CareerEvent {
    pub fn new(
        id: EventId,
        round_index: u32,
        category: EventCategory,
        title: impl Into<String>,
        body: impl Into<String>,
        label: Option<SentimentLabel>,
        hint: Option<String>,
    ) -> Self {
        CareerEvent {
            id,
            round_index,
            category,
            title: title.into(),
            body: body.into(),
            label,
            hint,
            status: EventStatus::OnTable,
            pocketed_on_day: None,
            image_prompt: None,
        }
    }

    pub fn hint_word_count(&self) -> usize {
        self.hint
            .as_deref()
            .map_or(0, |h| h.split_whitespace().count())
    }

    /// Structural invariants of a single event.
    pub fn check_invariants(&self) -> Result<(), String> {
        let id = &self.id;
        match self.category {
            EventCategory::Random => {
                let label = self
                    .label
                    .as_ref()
                    .ok_or_else(|| format!("{id}: random event without label"))?;
                label.validate().map_err(|e| format!("{id}: {e}"))?;
            }
            EventCategory::Milestone | EventCategory::Skill => {
                if self.label.is_some() {
                    return Err(format!("{id}: only random events carry a label"));
                }
            }
        }
        match self.category {
            EventCategory::Milestone if self.hint.is_some() => {
                return Err(format!("{id}: milestone events carry no hint"));
            }
            EventCategory::Random | EventCategory::Skill if self.hint.is_none() => {
                return Err(format!("{id}: missing hint"));
            }
            _ => {}
        }
        if (self.status == EventStatus::Pocketed) != self.pocketed_on_day.is_some() {
            return Err(format!(
                "{id}: pocketed_on_day must be set exactly when pocketed"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub intro: String,
    pub goal: String,
    pub start_date: NaiveDate,
}

impl UserProfile {
    pub fn validate(&self) -> Result<(), CareerError> {
        if self.intro.trim().is_empty() {
            return Err(CareerError::Validation("intro must not be empty".into()));
        }
        if self.goal.trim().is_empty() {
            return Err(CareerError::Validation("goal must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectionChange {
    pub from: String,
    pub to: String,
}

/// Maps cue drag distance to simulated days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCostRule {
    pub max_days_per_shot: u32,
    pub min_days_per_shot: u32,
}

impl Default for DayCostRule {
    fn default() -> Self {
        DayCostRule {
            max_days_per_shot: 90,
            min_days_per_shot: 1,
        }
    }
}

impl DayCostRule {
    pub fn validate(&self) -> Result<(), CareerError> {
        if !(1 <= self.min_days_per_shot
            && self.min_days_per_shot < self.max_days_per_shot
            && self.max_days_per_shot <= DEFAULT_MAX_DAYS)
        {
            return Err(CareerError::Validation(format!(
                "day rule needs 1 <= min < max <= {DEFAULT_MAX_DAYS}, got min {} max {}",
                self.min_days_per_shot, self.max_days_per_shot
            )));
        }
        Ok(())
    }

    /// `clamp(ceil(drag * max), min, min(max, remaining))`, never below 1.
    ///
    /// The product is nudged down by 1e-9 before rounding up so that values
    /// like `0.1 * 90 = 9.000000000000002` cost 9 days, not 10.
    pub fn drag_to_days(&self, drag_fraction: f64, days_remaining: u32) -> u32 {
        let raw = (drag_fraction * f64::from(self.max_days_per_shot) - 1e-9).ceil();
        let raw = if raw.is_finite() {
            raw.max(0.0) as u32
        } else {
            self.min_days_per_shot
        };
        let upper = self.max_days_per_shot.min(days_remaining).max(1);
        raw.max(self.min_days_per_shot).min(upper).max(1)
    }
}

/// Run limits. Only tests should need anything but the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLimits {
    pub max_days: u32,
    pub max_milestones: u32,
}

impl Default for SessionLimits {
    fn default() -> Self {
        SessionLimits {
            max_days: DEFAULT_MAX_DAYS,
            max_milestones: DEFAULT_MAX_MILESTONES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionStatus {
    Active,
    AwaitingDecision,
    AwaitingRound,
    Completed,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionStatus::Active => "Active",
            SessionStatus::AwaitingDecision => "AwaitingDecision",
            SessionStatus::AwaitingRound => "AwaitingRound",
            SessionStatus::Completed => "Completed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompletionReason {
    SixMilestones,
    DaysExhausted,
}
