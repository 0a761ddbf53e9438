use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    RewardShaping,
    NetworkShaping,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::RewardShaping => "reward",
            Phase::NetworkShaping => "network",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reward" => Ok(Phase::RewardShaping),
            "network" => Ok(Phase::NetworkShaping),
            _ => Err(Error::Format { line: None, msg: format!("unknown phase `{s}`") }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialStatus {
    Pending,
    Running,
    Completed,
    Failed,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Pending => "pending",
            TrialStatus::Running => "running",
            TrialStatus::Completed => "completed",
            TrialStatus::Failed => "failed",
        }
    }

    /// Completed or failed trials are never run again.
    pub fn is_final(self) -> bool {
        matches!(self, TrialStatus::Completed | TrialStatus::Failed)
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pending" => TrialStatus::Pending,
            "running" => TrialStatus::Running,
            "completed" => TrialStatus::Completed,
            "failed" => TrialStatus::Failed,
            _ => return Err(Error::Format { line: None, msg: format!("unknown status `{s}`") }),
        })
    }
}

/// One shaping trial. For the network phase `params` holds the continuous
/// widths before rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub phase: Phase,
    pub status: TrialStatus,
    pub seed: u64,
    /// NaN unless completed.
    pub objective: f64,
    pub params: Vec<f64>,
}

impl TrialRecord {
    /// Network widths after rounding to the nearest integer.
    pub fn rounded_widths(&self) -> Vec<usize> {
        self.params.iter().map(|w| w.round().max(1.0) as usize).collect()
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("{} {} {} {} {}", self.trial_id, self.phase, self.status, self.seed, self.objective);
        for p in &self.params {
            s.push(' ');
            s.push_str(&p.to_string());
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 5 {
            return Err(Error::Format { line: None, msg: "expected `trial_id phase status seed objective params...`".into() });
        }
        let bad = |what: &str| Error::Format { line: None, msg: format!("bad {what}") };
        let rec = TrialRecord {
            trial_id: f[0].parse().map_err(|_| bad("trial id"))?,
            phase: f[1].parse()?,
            status: f[2].parse()?,
            seed: f[3].parse().map_err(|_| bad("seed"))?,
            objective: f[4].parse().map_err(|_| bad("objective"))?,
            params: f[5..].iter().map(|p| p.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("parameter"))?,
        };
        if rec.status == TrialStatus::Completed && !rec.objective.is_finite() {
            return Err(Error::Format { line: None, msg: "completed trial without a finite objective".into() });
        }
        Ok(rec)
    }
}

/// Append-only log of trial records. Later lines for the same
/// `(phase, trial_id)` supersede earlier ones.
#[derive(Debug)]
pub struct TrialDb {
    path: Option<PathBuf>,
    file: Option<File>,
    log: Vec<TrialRecord>,
}

impl TrialDb {
    pub fn in_memory() -> Self {
        Self { path: None, file: None, log: Vec::new() }
    }

    /// Open (creating if missing) a database file and replay its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut log = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                log.push(TrialRecord::parse_line(line).map_err(|e| match e {
                    Error::Format { msg, .. } => Error::format(n + 1, msg),
                    other => other,
                })?);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path: Some(path), file: Some(file), log })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Append one record, flushed as a single write.
    pub fn append(&mut self, rec: TrialRecord) -> Result<()> {
        if let Some(f) = self.file.as_mut() {
            let mut line = rec.to_line();
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.log.push(rec);
        Ok(())
    }

    /// Every appended record in order.
    pub fn log(&self) -> &[TrialRecord] {
        &self.log
    }

    /// Current state of each trial of `phase`, ordered by trial id.
    pub fn trials(&self, phase: Phase) -> Vec<TrialRecord> {
        let mut latest: BTreeMap<usize, &TrialRecord> = BTreeMap::new();
        for r in self.log.iter().filter(|r| r.phase == phase) {
            latest.insert(r.trial_id, r);
        }
        latest.into_values().cloned().collect()
    }

    pub fn get(&self, phase: Phase, trial_id: usize) -> Option<&TrialRecord> {
        self.log.iter().rev().find(|r| r.phase == phase && r.trial_id == trial_id)
    }

    /// The completed trial of `phase` with the highest objective; ties go to
    /// the lowest trial id.
    pub fn best(&self, phase: Phase) -> Option<TrialRecord> {
        self.trials(phase)
            .into_iter()
            .filter(|r| r.status == TrialStatus::Completed)
            .fold(None, |best: Option<TrialRecord>, r| match best {
                Some(b) if b.objective >= r.objective => Some(b),
                _ => Some(r),
            })
    }
}
