use serde::{Deserialize, Serialize};

use super::{PhysicsError, Vec2};

pub const DEFAULT_WIDTH: f64 = 2.0;
pub const DEFAULT_HEIGHT: f64 = 1.0;
pub const DEFAULT_BALL_RADIUS: f64 = 0.03;
pub const DEFAULT_POCKET_RADIUS: f64 = 0.055;
pub const DEFAULT_FRICTION_DECEL: f64 = 0.4;
pub const DEFAULT_BALL_RESTITUTION: f64 = 0.95;
pub const DEFAULT_WALL_RESTITUTION: f64 = 0.85;
pub const DEFAULT_MAX_LAUNCH_SPEED: f64 = 3.0;
pub const DEFAULT_REST_SPEED_EPSILON: f64 = 0.01;
pub const DEFAULT_FIXED_DT: f64 = 1.0 / 240.0;
pub const DEFAULT_MAX_SIM_SECONDS: f64 = 60.0;

/// Table geometry and the physical constants of one simulation.
///
/// Pockets sit at the four corners and at the midpoints of the two long
/// rails, in the order: bottom-left, bottom-middle, bottom-right, top-left,
/// top-middle, top-right (y grows "up").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub width: f64,
    pub height: f64,
    pub pocket_centers: Vec<Vec2>,
    pub pocket_radius: f64,
    pub ball_radius: f64,
    pub friction_decel: f64,
    pub ball_restitution: f64,
    pub wall_restitution: f64,
    pub rest_speed_epsilon: f64,
    pub fixed_dt: f64,
    pub max_launch_speed: f64,
    pub max_sim_seconds: f64,
}

/// Optional replacements for individual [`Table`] parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableOverrides {
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub pocket_radius: Option<f64>,
    pub ball_radius: Option<f64>,
    pub friction_decel: Option<f64>,
    pub ball_restitution: Option<f64>,
    pub wall_restitution: Option<f64>,
    pub rest_speed_epsilon: Option<f64>,
    pub fixed_dt: Option<f64>,
    pub max_launch_speed: Option<f64>,
    pub max_sim_seconds: Option<f64>,
}

impl Default for Table {
    fn default() -> Self {
        Table {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            pocket_centers: pocket_layout(DEFAULT_WIDTH, DEFAULT_HEIGHT),
            pocket_radius: DEFAULT_POCKET_RADIUS,
            ball_radius: DEFAULT_BALL_RADIUS,
            friction_decel: DEFAULT_FRICTION_DECEL,
            ball_restitution: DEFAULT_BALL_RESTITUTION,
            wall_restitution: DEFAULT_WALL_RESTITUTION,
            rest_speed_epsilon: DEFAULT_REST_SPEED_EPSILON,
            fixed_dt: DEFAULT_FIXED_DT,
            max_launch_speed: DEFAULT_MAX_LAUNCH_SPEED,
            max_sim_seconds: DEFAULT_MAX_SIM_SECONDS,
        }
    }
}

fn pocket_layout(width: f64, height: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(width / 2.0, 0.0),
        Vec2::new(width, 0.0),
        Vec2::new(0.0, height),
        Vec2::new(width / 2.0, height),
        Vec2::new(width, height),
    ]
}

/// Builds the default table with `overrides` applied, rejecting any
/// combination that breaks the table invariants.
pub fn make_table(overrides: Option<&TableOverrides>) -> Result<Table, PhysicsError> {
    let mut table = Table::default();
    if let Some(o) = overrides {
        let set = |slot: &mut f64, value: Option<f64>| {
            if let Some(v) = value {
                *slot = v;
            }
        };
        set(&mut table.width, o.width);
        set(&mut table.height, o.height);
        set(&mut table.pocket_radius, o.pocket_radius);
        set(&mut table.ball_radius, o.ball_radius);
        set(&mut table.friction_decel, o.friction_decel);
        set(&mut table.ball_restitution, o.ball_restitution);
        set(&mut table.wall_restitution, o.wall_restitution);
        set(&mut table.rest_speed_epsilon, o.rest_speed_epsilon);
        set(&mut table.fixed_dt, o.fixed_dt);
        set(&mut table.max_launch_speed, o.max_launch_speed);
        set(&mut table.max_sim_seconds, o.max_sim_seconds);
        table.pocket_centers = pocket_layout(table.width, table.height);
    }
    table.validate()?;
    Ok(table)
}

impl Table {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let fields = [
            ("width", self.width),
            ("height", self.height),
            ("pocket_radius", self.pocket_radius),
            ("ball_radius", self.ball_radius),
            ("friction_decel", self.friction_decel),
            ("ball_restitution", self.ball_restitution),
            ("wall_restitution", self.wall_restitution),
            ("rest_speed_epsilon", self.rest_speed_epsilon),
            ("fixed_dt", self.fixed_dt),
            ("max_launch_speed", self.max_launch_speed),
            ("max_sim_seconds", self.max_sim_seconds),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(PhysicsError::config(format!("{name} must be finite")));
            }
        }
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("ball_radius", self.ball_radius),
            ("friction_decel", self.friction_decel),
            ("rest_speed_epsilon", self.rest_speed_epsilon),
            ("fixed_dt", self.fixed_dt),
            ("max_launch_speed", self.max_launch_speed),
            ("max_sim_seconds", self.max_sim_seconds),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(PhysicsError::config(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        if self.pocket_radius <= self.ball_radius {
            return Err(PhysicsError::config(format!(
                "pocket_radius ({}) must exceed ball_radius ({})",
                self.pocket_radius, self.ball_radius
            )));
        }
        for (name, value) in [
            ("ball_restitution", self.ball_restitution),
            ("wall_restitution", self.wall_restitution),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PhysicsError::config(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        if self.width <= 4.0 * self.ball_radius || self.height <= 4.0 * self.ball_radius {
            return Err(PhysicsError::config("table too small for its balls"));
        }
        // Discrete contacts only: a full-power ball must not skip through another.
        if self.max_launch_speed * self.fixed_dt >= self.ball_radius / 2.0 {
            return Err(PhysicsError::config(format!(
                "fixed_dt {} lets a max-speed ball travel >= ball_radius/2 per step",
                self.fixed_dt
            )));
        }
        if self.pocket_centers != pocket_layout(self.width, self.height) {
            return Err(PhysicsError::config(
                "pocket centers must match the six-pocket layout",
            ));
        }
        Ok(())
    }

    /// Cue spot: one quarter along the long axis, centred vertically.
    pub fn head_spot(&self) -> Vec2 {
        Vec2::new(self.width / 4.0, self.height / 2.0)
    }

    /// Rack apex: three quarters along the long axis, centred vertically.
    pub fn foot_spot(&self) -> Vec2 {
        Vec2::new(3.0 * self.width / 4.0, self.height / 2.0)
    }

    pub fn min_corner(&self) -> Vec2 {
        Vec2::new(self.ball_radius, self.ball_radius)
    }

    pub fn max_corner(&self) -> Vec2 {
        Vec2::new(
            self.width - self.ball_radius,
            self.height - self.ball_radius,
        )
    }

    pub fn contains_ball_center(&self, p: Vec2) -> bool {
        let (lo, hi) = (self.min_corner(), self.max_corner());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Index of the first pocket whose capture radius contains `p`.
    pub fn pocket_at(&self, p: Vec2) -> Option<usize> {
        self.pocket_centers
            .iter()
            .position(|c| c.distance(p) <= self.pocket_radius)
    }
}
