use std::collections::VecDeque;

use super::TaskKind;
use crate::error::Result;
use crate::geometry::{wrap_angle, Vec2};
use crate::planning::GuidancePath;
use crate::worldsim::{LidarScan, Pose, BEAM_COUNT};

pub const DEFAULT_FRAMES: usize = 3;

/// Width of the goal part of one frame.
pub fn goal_obs_width(task: TaskKind, n_partial: usize) -> usize {
    match task {
        TaskKind::P2p => 2,
        TaskKind::Pf => 2 * (n_partial + 1),
    }
}

/// Total observation width for `frames` stacked frames.
pub fn observation_width(task: TaskKind, frames: usize, n_partial: usize) -> usize {
    frames * (BEAM_COUNT + goal_obs_width(task, n_partial))
}

/// `(distance, bearing)` from the believed pose to the goal.
pub fn p2p_goal_obs(believed: &Pose, goal: Vec2) -> [f64; 2] {
    let d = goal - believed.position();
    [d.norm(), wrap_angle(d.y.atan2(d.x) - believed.heading)]
}

/// Robot-frame coordinates of the partial path, flattened `x0 y0 x1 y1 ...`.
pub fn pf_goal_obs(believed: &Pose, path: &GuidancePath, n_partial: usize) -> Result<Vec<f64>> {
    Ok(path.partial_observation(believed, n_partial)?.iter().flat_map(|p| [p.x, p.y]).collect())
}

/// One frame: normalized ranges followed by the goal observation.
pub fn build_frame(scan: &LidarScan, goal_obs: &[f64]) -> Vec<f64> {
    let mut frame = Vec::with_capacity(BEAM_COUNT + goal_obs.len());
    frame.extend(scan.normalized());
    frame.extend_from_slice(goal_obs);
    frame
}

/// Sliding window of the most recent frames, oldest first.
#[derive(Debug, Clone)]
pub struct FrameStack {
    capacity: usize,
    frames: VecDeque<Vec<f64>>,
}

impl FrameStack {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "frame stack needs at least one slot");
        Self { capacity, frames: VecDeque::with_capacity(capacity) }
    }

    /// Push a frame. The first frame of an episode fills every slot.
    pub fn push(&mut self, frame: Vec<f64>) {
        if self.frames.is_empty() {
            for _ in 1..self.capacity {
                self.frames.push_back(frame.clone());
            }
        } else if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn observation(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::interpolate_path;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bearing_is_relative_and_wrapped() {
        let pose = Pose::new(0.0, 0.0, FRAC_PI_2);
        let [d, b] = p2p_goal_obs(&pose, Vec2::new(0.0, 2.0));
        assert_abs_diff_eq!(d, 2.0);
        assert_abs_diff_eq!(b, 0.0);
        let [_, b] = p2p_goal_obs(&Pose::new(0.0, 0.0, 3.0), Vec2::new(1.0, -0.5));
        assert!(b > -std::f64::consts::PI && b <= std::f64::consts::PI);
    }

    #[test]
    fn worked_partial_path() {
        let raw: Vec<Vec2> =
            [[0., 0.], [1., 0.], [1., 1.], [1., 2.], [1., 3.]].iter().map(|p| Vec2::new(p[0], p[1])).collect();
        let mut path = interpolate_path(&raw, 1.0, 0.3);
        path.update_reached(Vec2::new(0.0, 0.0));
        let obs = pf_goal_obs(&Pose::new(0.0, 0.0, 0.0), &path, 2).unwrap();
        assert_eq!(obs, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn stack_shifts_one_slot() {
        let mut s = FrameStack::new(3);
        s.push(vec![1.0, 1.0]);
        assert_eq!(s.observation(), vec![1.0; 6]);
        s.push(vec![2.0, 2.0]);
        assert_eq!(s.observation(), vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0]);
        s.push(vec![3.0, 3.0]);
        s.push(vec![4.0, 4.0]);
        assert_eq!(s.observation(), vec![2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn widths() {
        assert_eq!(observation_width(TaskKind::P2p, 3, 2), 3 * 66);
        assert_eq!(observation_width(TaskKind::Pf, 3, 2), 3 * 70);
    }
}
