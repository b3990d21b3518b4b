//! Wire shapes. Nothing here exposes an unpocketed event's body or label:
//! on-table balls carry only their hover text.

use cuepath_core::career::{
    CareerEvent, CompletionReason, DayCostRule, DecisionRecord, DirectionChange, Session,
    SessionStatus, UserProfile,
};
use cuepath_core::ids::{BallId, SessionId};
use cuepath_core::physics::{BallKind, FrameTrace, Vec2};
use cuepath_core::pipeline::ProviderKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableView {
    pub width: f64,
    pub height: f64,
    pub ball_radius: f64,
    pub pocket_radius: f64,
    pub pockets: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallView {
    pub id: BallId,
    pub kind: BallKind,
    pub x: f64,
    pub y: f64,
    /// Hint for skills and randoms, title for the milestone, empty for the cue.
    pub hint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineView {
    pub day: u32,
    pub event: CareerEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDecisionView {
    pub event: CareerEvent,
    pub change: DirectionChange,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationView {
    pub in_flight: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: SessionId,
    pub status: SessionStatus,
    pub completion_reason: Option<CompletionReason>,
    pub profile: UserProfile,
    pub provider: ProviderKind,
    pub day_elapsed: u32,
    pub max_days: u32,
    pub milestones_achieved: u32,
    pub max_milestones: u32,
    pub current_round: u32,
    pub shots_taken: u32,
    pub day_rule: DayCostRule,
    pub table: TableView,
    pub balls: Vec<BallView>,
    pub timeline: Vec<TimelineView>,
    pub pending_decision: Option<PendingDecisionView>,
    pub accepted_changes: Vec<DirectionChange>,
    pub decisions: Vec<DecisionRecord>,
    pub generation: GenerationView,
    pub report_ready: bool,
}

impl SessionView {
    pub fn of(session: &Session, generation: GenerationView) -> Self {
        let table = session.table();
        let balls = session
            .balls
            .iter()
            .filter(|b| b.on_table())
            .map(|b| BallView {
                id: b.id,
                kind: b.kind,
                x: b.position.x,
                y: b.position.y,
                hint: session.visible_hint(b.id).unwrap_or_default(),
            })
            .collect();
        let timeline = session
            .timeline
            .iter()
            .filter_map(|t| {
                session.event(&t.event_id).map(|e| TimelineView {
                    day: t.day,
                    event: e.clone(),
                })
            })
            .collect();
        let pending_decision = session.pending_decision.as_ref().and_then(|id| {
            let event = session.event(id)?.clone();
            let change = match &event.label {
                Some(cuepath_core::career::SentimentLabel::Change {
                    change_from,
                    change_to,
                }) => DirectionChange {
                    from: change_from.clone(),
                    to: change_to.clone(),
                },
                _ => return None,
            };
            Some(PendingDecisionView { event, change })
        });
        SessionView {
            id: session.id.clone(),
            status: session.status,
            completion_reason: session.completion_reason,
            profile: session.profile.clone(),
            provider: session.config.provider,
            day_elapsed: session.day_elapsed,
            max_days: session.config.limits.max_days,
            milestones_achieved: session.milestones_achieved,
            max_milestones: session.config.limits.max_milestones,
            current_round: session.current_round,
            shots_taken: session.shots_taken,
            day_rule: session.config.day_rule,
            table: TableView {
                width: table.width,
                height: table.height,
                ball_radius: table.ball_radius,
                pocket_radius: table.pocket_radius,
                pockets: table.pocket_centers.clone(),
            },
            balls,
            timeline,
            pending_decision,
            accepted_changes: session.accepted_changes.clone(),
            decisions: session.decisions.clone(),
            generation,
            report_ready: session.report.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRequest {
    pub intro: String,
    pub goal: String,
    /// Defaults to today (UTC).
    #[serde(default)]
    pub start_date: Option<chrono::NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub profile: ProfileRequest,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub provider: Option<ProviderKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRequest {
    pub direction: Vec2,
    pub drag_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub accept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotResponse {
    pub days_charged: u32,
    pub frames: FrameTrace,
    /// Events collected by this shot, fully revealed.
    pub pocketed: Vec<CareerEvent>,
    pub session: SessionView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<SessionId>,
}
