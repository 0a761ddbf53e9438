use crate::geometry::{wrap_angle, Vec2};

pub const ROBOT_RADIUS: f64 = 0.3;
pub const V_MIN: f64 = -0.2;
pub const V_MAX: f64 = 1.0;
pub const W_MIN: f64 = -1.0;
pub const W_MAX: f64 = 1.0;

/// Ground-truth unicycle pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Radians in (−π, π].
    pub heading: f64,
    pub radius: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: wrap_angle(heading), radius: ROBOT_RADIUS }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        assert!(radius > 0.0, "robot radius must be positive");
        self.radius = radius;
        self
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn disc(&self) -> Disc {
        Disc { center: self.position(), radius: self.radius }
    }
}

/// A pose as estimated by localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

impl From<RobotState> for Pose {
    fn from(s: RobotState) -> Self {
        Self { x: s.x, y: s.y, heading: s.heading }
    }
}

/// Velocity command `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    /// Linear velocity, m/s.
    pub v: f64,
    /// Angular velocity, rad/s.
    pub w: f64,
}

impl Action {
    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }

    /// Clamp into `[-0.2, 1.0] × [-1.0, 1.0]`. NaN maps to zero.
    pub fn clamped(self) -> Self {
        let fix = |x: f64, lo: f64, hi: f64| if x.is_nan() { 0.0 } else { x.clamp(lo, hi) };
        Self { v: fix(self.v, V_MIN, V_MAX), w: fix(self.w, W_MIN, W_MAX) }
    }

    pub fn is_within_bounds(&self) -> bool {
        (V_MIN..=V_MAX).contains(&self.v) && (W_MIN..=W_MAX).contains(&self.w)
    }
}

/// A circular body: robot or moving obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

impl Disc {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self { center: Vec2::new(x, y), radius }
    }
}

/// Standard deviations of the four noise sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma_lidar: f64,
    pub sigma_speed: f64,
    pub sigma_turning: f64,
    pub sigma_localize: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { sigma_lidar: 0.3, sigma_speed: 0.1, sigma_turning: 0.1, sigma_localize: 0.1 }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self { sigma_lidar: 0.0, sigma_speed: 0.0, sigma_turning: 0.0, sigma_localize: 0.0 }
    }

    pub fn is_valid(&self) -> bool {
        [self.sigma_lidar, self.sigma_speed, self.sigma_turning, self.sigma_localize]
            .iter()
            .all(|s| *s >= 0.0 && s.is_finite())
    }
}
