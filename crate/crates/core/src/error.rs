use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pose ({x:.3}, {y:.3}): {reason}")]
    InvalidPose { x: f64, y: f64, reason: &'static str },

    #[error("invalid map spec: {0}")]
    InvalidSpec(String),

    #[error("format error{}: {msg}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    #[error("no path between start and goal")]
    NoPath,

    #[error("every waypoint of the guidance path is already reached")]
    AllReached,

    #[error("could not place {requested} obstacles ({placed} placed) after {attempts} attempts")]
    SpawnFailure { requested: usize, placed: usize, attempts: usize },

    #[error("expected {expected} reward weights, got {got}")]
    WeightLengthMismatch { expected: usize, got: usize },

    #[error("reward weight {index} = {value} is outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("replay buffer holds {size} transitions, batch needs {batch}")]
    InsufficientData { size: usize, batch: usize },

    #[error("non-finite loss at update {update}")]
    NonFiniteLoss { update: u64 },

    #[error("tell got {objectives} objectives for {candidates} candidates")]
    BatchMismatch { candidates: usize, objectives: usize },

    #[error("no completed trials in phase {0}")]
    NoCompletedTrials(&'static str),

    #[error("potential field is at a local minimum (|F| = {magnitude:.2e})")]
    Stuck { magnitude: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line: Some(line), msg: msg.into() }
    }
}
