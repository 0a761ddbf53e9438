//! Offline inspection of recorded trajectories.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::tasks::{load_trajectory, Outcome, Trajectory};
use crate::worldsim::{clearance, OccupancyMap, RobotState, ROBOT_RADIUS};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    /// Sum of segment lengths between consecutive rows, m.
    pub path_length: f64,
    /// Smallest static-map clearance of the robot disc along the rows, m.
    pub min_clearance: f64,
    pub outcome: Option<Outcome>,
    pub points: Vec<(f64, f64)>,
}

impl ReplaySummary {
    /// Summary lines followed by an `x y` point list.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "path_length {}", self.path_length);
        let _ = writeln!(out, "min_clearance {}", self.min_clearance);
        let _ = writeln!(out, "outcome {}", self.outcome.map_or("unknown", |o| o.as_str()));
        let _ = writeln!(out, "points {}", self.points.len());
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }
}

/// Accumulates length in the same order as the episode runner, so a
/// recorded episode replays to the identical value.
pub fn replay(trajectory: &Trajectory, map: &OccupancyMap) -> ReplaySummary {
    let mut length = 0.0;
    let mut min_clearance = f64::INFINITY;
    let mut prev: Option<RobotState> = None;
    for r in &trajectory.rows {
        let s = RobotState::new(r.x, r.y, r.heading).with_radius(ROBOT_RADIUS);
        if let Some(p) = prev {
            length += (s.position() - p.position()).norm();
        }
        min_clearance = min_clearance.min(clearance(map, &s, &[]));
        prev = Some(s);
    }
    ReplaySummary {
        path_length: length,
        min_clearance,
        outcome: trajectory.outcome,
        points: trajectory.rows.iter().map(|r| (r.x, r.y)).collect(),
    }
}

pub fn replay_files(trajectory: impl AsRef<Path>, map: impl AsRef<Path>) -> Result<ReplaySummary> {
    let t = load_trajectory(trajectory)?;
    let m = OccupancyMap::load(map)?;
    Ok(replay(&t, &m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::tasks::{parse_trajectory, run_episode, dump_trajectory, ConstantPolicy, Scenario, TaskConfig, TaskKind, TrajectoryRow};
    use crate::worldsim::{generate_map, Action, MapSpec, NoiseParams};

    fn row(x: f64, y: f64) -> TrajectoryRow {
        TrajectoryRow { t: 0.0, x, y, heading: 0.0, v: 0.0, w: 0.0, reward: 0.0 }
    }

    fn map() -> OccupancyMap {
        generate_map(&MapSpec::empty(10.0, 10.0, 0.1), 0).unwrap()
    }

    #[test]
    fn straight_metre() {
        let t = Trajectory { rows: vec![row(2.0, 5.0), row(2.5, 5.0), row(3.0, 5.0)], outcome: None };
        let s = replay(&t, &map());
        assert!((s.path_length - 1.0).abs() < 1e-9);
        assert_eq!(s.points.len(), 3);
        assert!(s.min_clearance > 1.0);
    }

    #[test]
    fn single_point_has_zero_length() {
        let t = Trajectory { rows: vec![row(2.0, 5.0)], outcome: None };
        assert_eq!(replay(&t, &map()).path_length, 0.0);
    }

    #[test]
    fn recorded_episode_length_matches_exactly() {
        let m = map();
        let sc = Scenario::p2p(RobotState::new(2.0, 5.0, 0.3), Vec2::new(8.0, 8.0));
        let mut noise = NoiseParams::default();
        noise.sigma_speed = 0.2;
        let r = run_episode(&TaskConfig::new(TaskKind::P2p), &m, sc, None, &mut ConstantPolicy(Action::new(0.7, 0.2)), noise, 9)
            .unwrap();
        let t = parse_trajectory(&dump_trajectory(&r.trajectory, Some(r.outcome))).unwrap();
        let s = replay(&t, &m);
        assert_eq!(s.path_length, r.path_length);
        assert_eq!(s.outcome, Some(r.outcome));
    }

    #[test]
    fn missing_file() {
        let e = replay_files("/nonexistent/t.txt", "/nonexistent/m.txt").unwrap_err();
        assert!(matches!(e, crate::Error::FileNotFound(_)));
    }
}
