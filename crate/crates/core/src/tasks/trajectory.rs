use std::fmt::Write as _;
use std::path::Path;

use super::episode::Outcome;
use crate::error::{Error, Result};
use crate::worldsim::{Action, RobotState};

pub const TRAJECTORY_HEADER: &str = "t x y heading v w reward";

/// One row of a trajectory dump: time, true pose, applied command, reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub w: f64,
    pub reward: f64,
}

impl TrajectoryRow {
    pub fn new(t: f64, state: &RobotState, action: Action, reward: f64) -> Self {
        Self { t, x: state.x, y: state.y, heading: state.heading, v: action.v, w: action.w, reward }
    }
}

/// A parsed trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub outcome: Option<Outcome>,
}

/// Text dump with a header row. Floats are written in shortest round-trip
/// form so parsing reproduces every value bit for bit. The outcome, if
/// given, goes on a trailing `# outcome` comment line.
pub fn dump_trajectory(rows: &[TrajectoryRow], outcome: Option<Outcome>) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{} {} {} {} {} {} {}", r.t, r.x, r.y, r.heading, r.v, r.w, r.reward);
    }
    if let Some(o) = outcome {
        let _ = writeln!(out, "# outcome {o}");
    }
    out
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split_whitespace().eq(TRAJECTORY_HEADER.split_whitespace()) => {}
        _ => return Err(Error::format(1, format!("expected header `{TRAJECTORY_HEADER}`"))),
    }
    let mut rows = Vec::new();
    let mut outcome = None;
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(o) = comment.trim().strip_prefix("outcome ") {
                outcome = Some(o.trim().parse().map_err(|_| Error::format(n + 1, "unknown outcome"))?);
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(n + 1, "non-numeric field"))?;
        let [t, x, y, heading, v, w, reward] = vals[..] else {
            return Err(Error::format(n + 1, format!("expected 7 fields, found {}", vals.len())));
        };
        rows.push(TrajectoryRow { t, x, y, heading, v, w, reward });
    }
    if rows.is_empty() {
        return Err(Error::Format { line: None, msg: "trajectory has no rows".into() });
    }
    Ok(Trajectory { rows, outcome })
}

pub fn save_trajectory(path: impl AsRef<Path>, rows: &[TrajectoryRow], outcome: Option<Outcome>) -> Result<()> {
    std::fs::write(path, dump_trajectory(rows, outcome))?;
    Ok(())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_trajectory(&text)
}
