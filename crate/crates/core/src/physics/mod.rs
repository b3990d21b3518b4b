//! Deterministic 2D billiards: fixed-step integration with constant rolling
//! friction, equal-mass ball contacts, rail rebounds and pocket capture.
//!
//! Everything here is a pure function over value state. Identical inputs
//! produce bit-identical outputs, which the journal and replay rely on.

mod collide;
mod sim;
mod table;
mod vec2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{BallId, EventId};

pub use collide::{resolve_ball_collision, resolve_wall_collision};
pub use sim::{
    apply_shot, kinetic_energy, respot_cue, simulate_until_rest, simulate_until_rest_observed,
    step, Capture,
};
pub use table::{make_table, Table, TableOverrides};
pub use vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid table configuration: {0}")]
    Config(String),
    #[error("invalid shot: {0}")]
    InvalidShot(String),
    #[error("cannot shoot while balls are still moving")]
    ShotWhileMoving,
    #[error("illegal table state: {0}")]
    IllegalState(String),
    #[error("simulation did not come to rest within {0} simulated seconds")]
    SimulationOverflow(f64),
}

impl PhysicsError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PhysicsError::Config(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BallKind {
    Cue,
    Milestone,
    Skill,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BallState {
    OnTable,
    Pocketed,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub id: BallId,
    pub kind: BallKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub state: BallState,
    pub event_id: Option<EventId>,
}

impl Ball {
    pub fn cue(id: BallId, position: Vec2) -> Self {
        Ball {
            id,
            kind: BallKind::Cue,
            position,
            velocity: Vec2::ZERO,
            state: BallState::OnTable,
            event_id: None,
        }
    }

    pub fn event(id: BallId, kind: BallKind, position: Vec2, event_id: EventId) -> Self {
        debug_assert!(kind != BallKind::Cue);
        Ball {
            id,
            kind,
            position,
            velocity: Vec2::ZERO,
            state: BallState::OnTable,
            event_id: Some(event_id),
        }
    }

    pub fn on_table(&self) -> bool {
        self.state == BallState::OnTable
    }

    pub fn speed(&self) -> f64 {
        self.velocity.length()
    }
}

/// One cue strike: a unit aim direction and how far the cue was drawn back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotInput {
    pub direction: Vec2,
    pub drag_fraction: f64,
}

impl ShotInput {
    pub fn new(direction: Vec2, drag_fraction: f64) -> Result<Self, PhysicsError> {
        let shot = ShotInput {
            direction,
            drag_fraction,
        };
        shot.validate()?;
        Ok(shot)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !self.direction.is_finite() || (self.direction.length() - 1.0).abs() > 1e-9 {
            return Err(PhysicsError::InvalidShot(format!(
                "direction ({}, {}) is not a unit vector",
                self.direction.x, self.direction.y
            )));
        }
        if !(self.drag_fraction > 0.0 && self.drag_fraction <= 1.0) {
            return Err(PhysicsError::InvalidShot(format!(
                "drag_fraction {} outside (0, 1]",
                self.drag_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPosition {
    pub id: BallId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocketEvent {
    pub ball_id: BallId,
    pub pocket: usize,
    pub time: f64,
}

/// Recorded motion of one shot. `frames[i]` holds the positions of every
/// on-table ball at `times[i]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameTrace {
    pub times: Vec<f64>,
    pub frames: Vec<Vec<BallPosition>>,
    pub pocket_events: Vec<PocketEvent>,
}

impl FrameTrace {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub(crate) fn push_frame(&mut self, time: f64, balls: &[Ball]) {
        self.times.push(time);
        self.frames.push(
            balls
                .iter()
                .filter(|b| b.on_table())
                .map(|b| BallPosition {
                    id: b.id,
                    x: b.position.x,
                    y: b.position.y,
                })
                .collect(),
        );
    }

    /// Keeps every `stride`-th frame plus the final one. Pocket events are kept whole.
    pub fn downsample(&self, stride: usize) -> FrameTrace {
        let stride = stride.max(1);
        let last = self.frames.len().saturating_sub(1);
        let keep = |i: usize| (i + 1) % stride == 0 || i == last;
        FrameTrace {
            times: self
                .times
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, t)| *t)
                .collect(),
            frames: self
                .frames
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, f)| f.clone())
                .collect(),
            pocket_events: self.pocket_events.clone(),
        }
    }
}
