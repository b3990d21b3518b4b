//! Headless play: scripted shots and decisions, the nearest-pocket
//! auto-policy, and a loop that drives a session to completion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::career::{Session, SessionStatus};
use crate::engine::{Engine, EngineError};
use crate::ids::BallId;
use crate::physics::{BallKind, ShotInput, Vec2};
use crate::pipeline::{GenerationPolicy, Provider};
use crate::report::JourneyReport;

/// One line of an NDJSON play script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScriptStep {
    Shot { direction: Vec2, drag_fraction: f64 },
    Decision { accept: bool },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("script line {line}: {detail}")]
pub struct ScriptError {
    pub line: usize,
    pub detail: String,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, ScriptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ScriptError {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionPolicy {
    #[default]
    Accept,
    Decline,
    Alternate,
}

impl DecisionPolicy {
    fn choose(self, decided_so_far: usize) -> bool {
        match self {
            DecisionPolicy::Accept => true,
            DecisionPolicy::Decline => false,
            DecisionPolicy::Alternate => decided_so_far % 2 == 0,
        }
    }
}

/// Shot for the nearest-pocket policy: pick the most valuable ball on the
/// table (milestone, then random, then skill; ties go to the ball closest to
/// a pocket), and aim the cue at the ghost-ball position that sends it
/// straight into its nearest pocket.
pub fn nearest_pocket_shot(session: &Session, drag_fraction: f64) -> Option<ShotInput> {
    let table = session.table();
    session.cue().filter(|c| c.on_table())?;
    let priority = |kind: BallKind| match kind {
        BallKind::Milestone => 0,
        BallKind::Random => 1,
        BallKind::Skill => 2,
        BallKind::Cue => 3,
    };
    let target = session
        .balls
        .iter()
        .filter(|b| b.on_table() && b.kind != BallKind::Cue)
        .min_by(|a, b| {
            let da = a
                .position
                .distance(nearest_pocket(&table.pocket_centers, a.position));
            let db = b
                .position
                .distance(nearest_pocket(&table.pocket_centers, b.position));
            priority(a.kind)
                .cmp(&priority(b.kind))
                .then(da.total_cmp(&db))
                .then(a.id.cmp(&b.id))
        })?;
    aim_at_ball(session, target.id, drag_fraction)
}

fn nearest_pocket(pockets: &[Vec2], p: Vec2) -> Vec2 {
    pockets
        .iter()
        .copied()
        .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
        .expect("six pockets")
}

/// Ghost-ball shot sending `ball` straight toward its nearest pocket.
pub fn aim_at_ball(session: &Session, ball: BallId, drag_fraction: f64) -> Option<ShotInput> {
    let table = session.table();
    let cue = session.cue().filter(|c| c.on_table())?;
    let target = session.ball(ball).filter(|b| b.on_table())?;
    let pocket = nearest_pocket(&table.pocket_centers, target.position);
    let ghost = match (pocket - target.position).normalized() {
        Some(n) => target.position - n * (2.0 * table.ball_radius),
        None => target.position,
    };
    let direction = (ghost - cue.position)
        .normalized()
        .or_else(|| (target.position - cue.position).normalized())
        .unwrap_or(Vec2::UNIT_X);
    ShotInput::new(direction, drag_fraction).ok()
}

fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    let r = Vec2::new(v.x * c - v.y * s, v.x * s + v.y * c);
    r.normalized().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub generation: GenerationPolicy,
    pub decisions: DecisionPolicy,
    /// Drag used by the auto-policy.
    pub auto_drag: f64,
    /// Standard deviation (radians) of aim noise for the auto-policy; zero aims exactly.
    pub aim_noise: f64,
    pub noise_seed: u64,
    /// Generate the journey report once the run completes.
    pub with_report: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            generation: GenerationPolicy::default(),
            decisions: DecisionPolicy::Accept,
            auto_drag: 1.0,
            aim_noise: 0.0,
            noise_seed: 0,
            with_report: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("script step {step}: {detail}")]
    Script { step: usize, detail: String },
    #[error("step {step} (journal seq {seq}): {source}")]
    Engine {
        step: usize,
        seq: u64,
        source: EngineError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub session: Session,
    pub report: Option<JourneyReport>,
    pub shots: u32,
    pub scripted_steps: usize,
}

/// Plays `session` to completion. Script steps are consumed in order; once
/// they run out the auto-policy takes over shots and the decision policy
/// answers change events.
pub fn run_session(
    engine: &Engine<'_>,
    provider: &dyn Provider,
    mut session: Session,
    script: &[ScriptStep],
    options: &RunOptions,
) -> Result<RunSummary, RunError> {
    let mut next = 0usize;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(options.noise_seed);
    let noise = (options.aim_noise > 0.0)
        .then(|| Normal::new(0.0, options.aim_noise).expect("finite sigma"));
    let mut shots = 0u32;
    // Every shot costs at least one day, so this bounds any legal run.
    let guard = session.config.limits.max_days as usize * 4 + script.len() + 64;

    for _ in 0..guard {
        let step = next + 1;
        let fail = |session: &Session, source: EngineError| RunError::Engine {
            step,
            seq: session.journal_len,
            source,
        };
        match session.status {
            SessionStatus::Completed => break,
            SessionStatus::AwaitingRound => {
                engine
                    .advance_round(&mut session, provider, &options.generation)
                    .map_err(|e| fail(&session, e))?;
            }
            SessionStatus::AwaitingDecision => {
                let accept = match script.get(next) {
                    Some(ScriptStep::Decision { accept }) => {
                        next += 1;
                        *accept
                    }
                    Some(ScriptStep::Shot { .. }) => {
                        return Err(RunError::Script {
                            step,
                            detail: "shot while a decision is pending".into(),
                        });
                    }
                    None => options.decisions.choose(session.decisions.len()),
                };
                engine
                    .decide(&mut session, accept)
                    .map_err(|e| fail(&session, e))?;
            }
            SessionStatus::Active => {
                let shot = match script.get(next) {
                    Some(ScriptStep::Shot {
                        direction,
                        drag_fraction,
                    }) => {
                        next += 1;
                        ShotInput {
                            direction: *direction,
                            drag_fraction: *drag_fraction,
                        }
                    }
                    Some(ScriptStep::Decision { .. }) => {
                        return Err(RunError::Script {
                            step,
                            detail: "decision response but no change event is pending".into(),
                        });
                    }
                    None => {
                        let mut shot = nearest_pocket_shot(&session, options.auto_drag)
                            .ok_or_else(|| RunError::Script {
                                step,
                                detail: "auto-policy found no shot".into(),
                            })?;
                        if let Some(dist) = &noise {
                            shot.direction = rotate(shot.direction, dist.sample(&mut noise_rng));
                        }
                        shot
                    }
                };
                engine
                    .shoot(&mut session, shot)
                    .map_err(|e| fail(&session, e))?;
                shots += 1;
            }
        }
    }
    if session.status != SessionStatus::Completed {
        return Err(RunError::Script {
            step: next + 1,
            detail: "session did not complete".into(),
        });
    }
    if next < script.len() {
        return Err(RunError::Script {
            step: next + 1,
            detail: format!(
                "{} script step(s) left after the session completed",
                script.len() - next
            ),
        });
    }
    let report = if options.with_report {
        let step = next + 1;
        Some(
            engine
                .report(&mut session, provider, &options.generation)
                .map_err(|source| RunError::Engine {
                    step,
                    seq: session.journal_len,
                    source,
                })?,
        )
    } else {
        None
    };
    Ok(RunSummary {
        session,
        report,
        shots,
        scripted_steps: next,
    })
}
