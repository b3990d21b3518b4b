use serde::{Deserialize, Serialize};

use super::collide::{resolve_ball_collision, resolve_wall_collision};
use super::{
    Ball, BallKind, BallState, FrameTrace, PhysicsError, PocketEvent, ShotInput, Table, Vec2,
};
use crate::ids::BallId;

/// A ball that dropped into a pocket during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capture {
    pub ball_id: BallId,
    pub pocket: usize,
}

/// Total kinetic energy of on-table balls (unit mass).
pub fn kinetic_energy(balls: &[Ball]) -> f64 {
    balls
        .iter()
        .filter(|b| b.on_table())
        .map(|b| 0.5 * b.velocity.length_squared())
        .sum()
}

fn any_moving(table: &Table, balls: &[Ball]) -> bool {
    balls
        .iter()
        .any(|b| b.on_table() && b.speed() >= table.rest_speed_epsilon)
}

fn id_order(balls: &[Ball]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by_key(|&i| balls[i].id);
    order
}

/// Launches the cue ball. Speed scales linearly with the drag fraction up to
/// the table's `max_launch_speed`.
pub fn apply_shot(
    table: &Table,
    balls: &[Ball],
    shot: &ShotInput,
) -> Result<Vec<Ball>, PhysicsError> {
    shot.validate()?;
    if any_moving(table, balls) {
        return Err(PhysicsError::ShotWhileMoving);
    }
    let mut out = balls.to_vec();
    let cue = out
        .iter_mut()
        .find(|b| b.kind == BallKind::Cue)
        .ok_or_else(|| PhysicsError::IllegalState("no cue ball".into()))?;
    if !cue.on_table() {
        return Err(PhysicsError::IllegalState(
            "cue ball is not on the table".into(),
        ));
    }
    cue.velocity = shot.direction * (shot.drag_fraction * table.max_launch_speed);
    Ok(out)
}

/// Advances the table by one `fixed_dt`.
///
/// Friction first (speed reduced, direction kept), then positions move with
/// the updated velocity, then contacts resolve pairwise in ascending id order,
/// then rails, then pocket capture.
pub fn step(table: &Table, balls: &[Ball]) -> (Vec<Ball>, Vec<Capture>) {
    let mut out = balls.to_vec();
    let order = id_order(&out);
    let captures = step_in_place(table, &mut out, &order);
    (out, captures)
}

fn step_in_place(table: &Table, balls: &mut [Ball], order: &[usize]) -> Vec<Capture> {
    let dt = table.fixed_dt;
    let slow = table.friction_decel * dt;
    for ball in balls.iter_mut().filter(|b| b.on_table()) {
        let speed = ball.speed();
        if speed > 0.0 {
            let reduced = speed - slow;
            ball.velocity = if reduced > 0.0 {
                ball.velocity * (reduced / speed)
            } else {
                Vec2::ZERO
            };
        }
        ball.position += ball.velocity * dt;
    }

    let contact = 2.0 * table.ball_radius;
    for (n, &i) in order.iter().enumerate() {
        for &j in &order[n + 1..] {
            if !(balls[i].on_table() && balls[j].on_table()) {
                continue;
            }
            if (balls[j].position - balls[i].position).length_squared() <= contact * contact {
                let (a, b) = resolve_ball_collision(
                    &balls[i],
                    &balls[j],
                    table.ball_restitution,
                    table.ball_radius,
                );
                balls[i] = a;
                balls[j] = b;
            }
        }
    }

    for &i in order {
        if balls[i].on_table() {
            balls[i] = resolve_wall_collision(&balls[i], table);
        }
    }
    capture_pocketed(table, balls, order)
}

fn capture_pocketed(table: &Table, balls: &mut [Ball], order: &[usize]) -> Vec<Capture> {
    let mut captures = Vec::new();
    for &i in order {
        let ball = &mut balls[i];
        if !ball.on_table() {
            continue;
        }
        if let Some(pocket) = table.pocket_at(ball.position) {
            ball.state = BallState::Pocketed;
            ball.velocity = Vec2::ZERO;
            captures.push(Capture {
                ball_id: ball.id,
                pocket,
            });
        }
    }
    captures
}

/// Positional relaxation for balls left touching at rest (typically pressed
/// against a rail by a neighbour). Velocities are not touched.
fn settle(table: &Table, balls: &mut [Ball], order: &[usize]) -> bool {
    let contact = 2.0 * table.ball_radius;
    let mut changed = false;
    for _ in 0..256 {
        let mut moved = false;
        for (n, &i) in order.iter().enumerate() {
            for &j in &order[n + 1..] {
                if !(balls[i].on_table() && balls[j].on_table()) {
                    continue;
                }
                let delta = balls[j].position - balls[i].position;
                let dist = delta.length();
                if dist < contact - 1e-10 {
                    let normal = delta.normalized().unwrap_or(Vec2::UNIT_X);
                    // Slight over-push so the pair does not hover at the tolerance.
                    let push = normal * ((contact - dist) / 2.0 + 1e-10);
                    balls[i].position -= push;
                    balls[j].position += push;
                    moved = true;
                }
            }
        }
        let (lo, hi) = (table.min_corner(), table.max_corner());
        for ball in balls.iter_mut().filter(|b| b.on_table()) {
            ball.position.x = ball.position.x.clamp(lo.x, hi.x);
            ball.position.y = ball.position.y.clamp(lo.y, hi.y);
        }
        if !moved {
            break;
        }
        changed = true;
    }
    changed
}

/// Puts a pocketed cue back on the head spot, stepping +y (then -y) in
/// ball-radius increments until it touches nothing. Returns whether a respot
/// happened.
pub fn respot_cue(table: &Table, balls: &mut [Ball]) -> bool {
    let Some(idx) = balls.iter().position(|b| b.kind == BallKind::Cue) else {
        return false;
    };
    if balls[idx].state != BallState::Pocketed {
        return false;
    }
    let spot = table.head_spot();
    let r = table.ball_radius;
    let (lo, hi) = (table.min_corner(), table.max_corner());
    let free = |p: Vec2, balls: &[Ball]| {
        balls
            .iter()
            .enumerate()
            .all(|(k, b)| k == idx || !b.on_table() || b.position.distance(p) >= 2.0 * r)
    };
    let mut candidates = Vec::new();
    let mut y = spot.y;
    while y <= hi.y {
        candidates.push(Vec2::new(spot.x, y));
        y += r;
    }
    let mut y = spot.y - r;
    while y >= lo.y {
        candidates.push(Vec2::new(spot.x, y));
        y -= r;
    }
    let position = candidates
        .into_iter()
        .find(|p| free(*p, balls))
        .unwrap_or(spot);
    let cue = &mut balls[idx];
    cue.position = position;
    cue.velocity = Vec2::ZERO;
    cue.state = BallState::OnTable;
    true
}

/// Steps the table until every on-table ball is slower than
/// `rest_speed_epsilon`, recording a frame per step.
pub fn simulate_until_rest(
    table: &Table,
    balls: &[Ball],
) -> Result<(Vec<Ball>, FrameTrace), PhysicsError> {
    simulate_until_rest_observed(table, balls, |_| {})
}

/// As [`simulate_until_rest`], calling `observer` with the table state after
/// every integration step.
pub fn simulate_until_rest_observed(
    table: &Table,
    balls: &[Ball],
    mut observer: impl FnMut(&[Ball]),
) -> Result<(Vec<Ball>, FrameTrace), PhysicsError> {
    let mut state = balls.to_vec();
    let mut trace = FrameTrace::default();
    if !any_moving(table, &state) {
        return Ok((state, trace));
    }
    let order = id_order(&state);
    let max_steps = (table.max_sim_seconds / table.fixed_dt).ceil() as u64;
    let mut steps: u64 = 0;

    while any_moving(table, &state) {
        if steps >= max_steps {
            return Err(PhysicsError::SimulationOverflow(table.max_sim_seconds));
        }
        let captures = step_in_place(table, &mut state, &order);
        steps += 1;
        let time = steps as f64 * table.fixed_dt;
        trace.push_frame(time, &state);
        trace
            .pocket_events
            .extend(captures.into_iter().map(|c| PocketEvent {
                ball_id: c.ball_id,
                pocket: c.pocket,
                time,
            }));
        observer(&state);
    }

    for ball in state.iter_mut().filter(|b| b.on_table()) {
        ball.velocity = Vec2::ZERO;
    }
    let mut changed = settle(table, &mut state, &order);
    let time = (steps + 1) as f64 * table.fixed_dt;
    let late = capture_pocketed(table, &mut state, &order);
    changed |= !late.is_empty();
    trace
        .pocket_events
        .extend(late.into_iter().map(|c| PocketEvent {
            ball_id: c.ball_id,
            pocket: c.pocket,
            time,
        }));
    changed |= respot_cue(table, &mut state);
    if changed {
        trace.push_frame(time, &state);
    }
    observer(&state);
    Ok((state, trace))
}
