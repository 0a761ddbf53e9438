use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::planning::GuidancePath;

/// Point-to-point or path-following.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    P2p,
    Pf,
}

impl TaskKind {
    /// Number of atomic reward terms.
    pub fn reward_terms(self) -> usize {
        match self {
            TaskKind::P2p => 6,
            TaskKind::Pf => 4,
        }
    }

    pub fn term_names(self) -> &'static [&'static str] {
        match self {
            TaskKind::P2p => &["step", "goal_dist", "collision", "turning", "clearance", "goal"],
            TaskKind::Pf => &["step", "dist", "collision", "clearance"],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::P2p => "p2p",
            TaskKind::Pf => "pf",
        })
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2p" => Ok(TaskKind::P2p),
            "pf" => Ok(TaskKind::Pf),
            other => Err(Error::Config(format!("unknown task `{other}` (expected p2p or pf)"))),
        }
    }
}

/// Reward weight vector in the shaping box `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights {
    task: TaskKind,
    weights: Vec<f64>,
}

impl RewardWeights {
    pub fn new(task: TaskKind, weights: Vec<f64>) -> Result<Self> {
        check_len(task, &weights)?;
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(0.0..=1.0).contains(*w)) {
            return Err(Error::WeightOutOfRange { index, value });
        }
        Ok(Self { task, weights })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Hand-set weights used when no shaping result is available.
    pub fn hand_tuned(task: TaskKind) -> Self {
        let w = match task {
            TaskKind::P2p => vec![0.0, 0.01, 1.0, 0.0, 0.0, 1.0],
            TaskKind::Pf => vec![0.0, 0.02, 1.0, 0.02],
        };
        Self { task, weights: w }
    }
}

fn check_len(task: TaskKind, weights: &[f64]) -> Result<()> {
    let expected = task.reward_terms();
    if weights.len() != expected {
        return Err(Error::WeightLengthMismatch { expected, got: weights.len() });
    }
    Ok(())
}

/// Per-step quantities feeding the point-to-point reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2pTerms {
    /// Believed distance to the goal, m.
    pub goal_distance: f64,
    pub collision: bool,
    /// Commanded angular speed, rad/s.
    pub angular_speed: f64,
    /// Distance to the closest obstacle, m.
    pub clearance: f64,
    pub reached_goal: bool,
}

impl P2pTerms {
    /// `[r_step, r_goalDist, r_collision, r_turning, r_clearance, r_goal]`.
    /// Penalties carry their sign inside the term so non-negative weights
    /// only scale them.
    pub fn atoms(&self) -> [f64; 6] {
        [
            -1.0,
            -self.goal_distance,
            if self.collision { -1.0 } else { 0.0 },
            -self.angular_speed.abs(),
            self.clearance,
            if self.reached_goal { 1.0 } else { 0.0 },
        ]
    }
}

/// Per-step quantities feeding the path-following reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfTerms {
    /// Believed distance to the first unreached waypoint, m.
    pub waypoint_distance: f64,
    pub collision: bool,
    pub clearance: f64,
}

impl PfTerms {
    /// `[r_step, r_dist, r_collision, r_clearance]`.
    pub fn atoms(&self, clearance_threshold: f64) -> [f64; 4] {
        [
            -1.0,
            -self.waypoint_distance,
            if self.collision { -1.0 } else { 0.0 },
            if self.clearance < clearance_threshold { -1.0 } else { 0.0 },
        ]
    }
}

fn dot(w: &[f64], a: &[f64]) -> f64 {
    w.iter().zip(a).map(|(w, a)| w * a).sum()
}

pub fn p2p_reward(terms: &P2pTerms, weights: &[f64]) -> Result<f64> {
    check_len(TaskKind::P2p, weights)?;
    Ok(dot(weights, &terms.atoms()))
}

pub fn pf_reward(terms: &PfTerms, weights: &[f64], clearance_threshold: f64) -> Result<f64> {
    check_len(TaskKind::Pf, weights)?;
    Ok(dot(weights, &terms.atoms(clearance_threshold)))
}

/// 1 iff any visited true position came strictly within `goal_radius` of the goal.
pub fn p2p_true_objective<I: IntoIterator<Item = Vec2>>(positions: I, goal: Vec2, goal_radius: f64) -> f64 {
    if positions.into_iter().any(|p| (p - goal).norm() < goal_radius) {
        1.0
    } else {
        0.0
    }
}

/// Fraction of reached waypoints.
pub fn pf_true_objective(path: &GuidancePath) -> f64 {
    path.reached().iter().filter(|r| **r).count() as f64 / path.len() as f64
}
