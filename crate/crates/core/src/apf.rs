//! Path-guided artificial potential field controller driven by lidar.

use crate::error::{Error, Result};
use crate::geometry::{to_robot_frame, Vec2};
use crate::planning::GuidancePath;
use crate::tasks::{Policy, StepView, TaskKind};
use crate::worldsim::{Action, LidarScan, Pose, V_MAX, W_MAX, W_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct ApfParams {
    pub attraction_gain: f64,
    pub repulsion_gain: f64,
    /// Lidar returns at or beyond this range exert no force, m.
    pub influence_distance: f64,
    /// Arc length past the first unreached waypoint where the attractor sits, m.
    pub lookahead: f64,
    /// Net force magnitudes below this count as a local minimum.
    pub stuck_threshold: f64,
    /// Linear speed per unit of forward force.
    pub speed_gain: f64,
    /// Angular speed per radian of heading error.
    pub turn_gain: f64,
}

impl Default for ApfParams {
    fn default() -> Self {
        Self {
            attraction_gain: 1.0,
            repulsion_gain: 0.5,
            influence_distance: 1.5,
            lookahead: 1.0,
            stuck_threshold: 1e-3,
            speed_gain: 1.0,
            turn_gain: 1.5,
        }
    }
}

impl ApfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.attraction_gain > 0.0 && self.repulsion_gain > 0.0 && self.influence_distance > 0.0) {
            return Err(Error::Config("APF gains and influence distance must be positive".into()));
        }
        if !(self.lookahead >= 0.0 && self.stuck_threshold >= 0.0 && self.speed_gain > 0.0 && self.turn_gain > 0.0) {
            return Err(Error::Config("APF lookahead, threshold and mapping gains are out of range".into()));
        }
        Ok(())
    }
}

/// Shortest range used in the repulsion term, so a zero reading stays finite.
const MIN_RANGE: f64 = 1e-3;

/// Net potential force in the robot frame: a unit-direction attraction toward
/// `target` plus one repulsive term per close lidar return.
pub fn apf_force(scan: &LidarScan, believed: &Pose, target: Vec2, params: &ApfParams) -> Vec2 {
    let t = to_robot_frame(target, believed.position(), believed.heading);
    let n = t.norm();
    let mut f = if n > 1e-9 { t * (params.attraction_gain / n) } else { Vec2::zeros() };
    let d0 = params.influence_distance;
    for (k, &r) in scan.ranges.iter().enumerate() {
        if r >= d0 {
            continue;
        }
        let r = r.max(MIN_RANGE);
        let mag = params.repulsion_gain * (1.0 / r - 1.0 / d0) / (r * r);
        let (s, c) = scan.beam_offset(k).sin_cos();
        f -= Vec2::new(c, s) * mag;
    }
    f
}

/// Heading controller: turn toward the force, move forward along it.
pub fn force_to_action(force: Vec2, params: &ApfParams) -> Result<Action> {
    let magnitude = force.norm();
    if !(magnitude >= params.stuck_threshold) {
        return Err(Error::Stuck { magnitude });
    }
    let err = force.y.atan2(force.x);
    let v = if err.abs() > std::f64::consts::FRAC_PI_2 { 0.0 } else { (params.speed_gain * force.x).clamp(0.0, V_MAX) };
    Ok(Action::new(v, (params.turn_gain * err).clamp(W_MIN, W_MAX)))
}

/// Path-guided command. The attractor sits `lookahead` metres along the path
/// past the first unreached waypoint.
pub fn apf_action(scan: &LidarScan, believed: &Pose, path: &GuidancePath, params: &ApfParams) -> Result<Action> {
    let first = path.first_unreached().ok_or(Error::AllReached)?;
    let target = path.point_along(first, params.lookahead);
    force_to_action(apf_force(scan, believed, target, params), params)
}

/// Point-to-point command attracted straight at the goal.
pub fn apf_p2p_action(scan: &LidarScan, believed: &Pose, goal: Vec2, params: &ApfParams) -> Result<Action> {
    force_to_action(apf_force(scan, believed, goal, params), params)
}

/// APF as an episode policy. A stuck step commands zero velocity.
#[derive(Debug, Clone, Default)]
pub struct ApfPolicy {
    pub params: ApfParams,
    /// Steps on which the controller reported a local minimum.
    pub stuck_steps: usize,
}

impl ApfPolicy {
    pub fn new(params: ApfParams) -> Self {
        Self { params, stuck_steps: 0 }
    }
}

impl Policy for ApfPolicy {
    fn act(&mut self, view: &StepView<'_>) -> Action {
        let cmd = match (view.task, view.path) {
            (TaskKind::Pf, Some(path)) => apf_action(view.scan, &view.believed, path, &self.params),
            _ => apf_p2p_action(view.scan, &view.believed, view.goal, &self.params),
        };
        match cmd {
            Ok(a) => a,
            Err(Error::Stuck { .. }) => {
                self.stuck_steps += 1;
                Action::default()
            }
            Err(_) => Action::default(),
        }
    }
}
