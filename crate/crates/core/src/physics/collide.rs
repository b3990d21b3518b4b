use super::{Ball, Table, Vec2};

/// Equal-mass contact between two touching or overlapping balls.
///
/// The impulse acts along the line of centres and only when the balls are
/// approaching; tangential components are untouched. The pair is then pushed
/// apart symmetrically to exactly `2 * ball_radius`. Coincident centres use
/// +x as the contact normal.
pub fn resolve_ball_collision(
    a: &Ball,
    b: &Ball,
    restitution: f64,
    ball_radius: f64,
) -> (Ball, Ball) {
    let mut a = a.clone();
    let mut b = b.clone();
    let delta = b.position - a.position;
    let dist = delta.length();
    let normal = delta.normalized().unwrap_or(Vec2::UNIT_X);

    let approach = (b.velocity - a.velocity).dot(normal);
    if approach < 0.0 {
        let impulse = -(1.0 + restitution) * approach / 2.0;
        a.velocity -= normal * impulse;
        b.velocity += normal * impulse;
    }

    let overlap = 2.0 * ball_radius - dist;
    if overlap > 0.0 {
        let push = normal * (overlap / 2.0);
        a.position -= push;
        b.position += push;
    }
    (a, b)
}

/// Reflects the velocity component heading into a rail, scaled by the wall
/// restitution, and clamps the centre back inside the playable rectangle.
pub fn resolve_wall_collision(ball: &Ball, table: &Table) -> Ball {
    let mut ball = ball.clone();
    let (lo, hi) = (table.min_corner(), table.max_corner());
    let e = table.wall_restitution;

    if ball.position.x <= lo.x {
        ball.position.x = lo.x;
        if ball.velocity.x < 0.0 {
            ball.velocity.x *= -e;
        }
    } else if ball.position.x >= hi.x {
        ball.position.x = hi.x;
        if ball.velocity.x > 0.0 {
            ball.velocity.x *= -e;
        }
    }
    if ball.position.y <= lo.y {
        ball.position.y = lo.y;
        if ball.velocity.y < 0.0 {
            ball.velocity.y *= -e;
        }
    } else if ball.position.y >= hi.y {
        ball.position.y = hi.y;
        if ball.velocity.y > 0.0 {
            ball.velocity.y *= -e;
        }
    }
    ball
}
