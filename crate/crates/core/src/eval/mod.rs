//! Evaluation harness: noise and clutter sweeps, metrics, trajectory replay
//! and the flat configuration format shared by the command-line tool.

mod config;
mod replay;
mod sweep;

pub use config::ConfigMap;
pub use replay::{replay, replay_files, ReplaySummary};
pub use sweep::{
    aggregate, episode_seed, episodes_csv, metrics_csv, run_sweep, Cell, EpisodeRecord, MapSource, MetricsRow,
    PolicySource, rerun_episode, SeekPolicy, SweepMap, SweepOutput, SweepSpec, EPISODE_HEADER, MAX_SWEEP_OBSTACLES,
};

use crate::error::{Error, Result};
use crate::worldsim::MapKind;

/// Parse a map layout such as `empty`, `corridor:2`, `boxes:1:3:0.5:1.5`,
/// `rooms:5:1` or `utrap:3:2`.
pub fn parse_map_kind(text: &str) -> Result<MapKind> {
    let mut parts = text.trim().split(':');
    let name = parts.next().unwrap_or_default().to_ascii_lowercase();
    let nums: Vec<f64> = parts
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad map parameter `{p}` in `{text}`"))))
        .collect::<Result<_>>()?;
    let want = |n: usize| {
        if nums.len() == n {
            Ok(())
        } else {
            Err(Error::Config(format!("map kind `{name}` takes {n} parameters, got {}", nums.len())))
        }
    };
    let count = |x: f64| {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(Error::Config(format!("box count {x} must be a non-negative integer")))
        }
    };
    match name.as_str() {
        "empty" => want(0).map(|_| MapKind::Empty),
        "corridor" => want(1).map(|_| MapKind::Corridor { width_m: nums[0] }),
        "boxes" => {
            want(4)?;
            Ok(MapKind::Boxes {
                min_count: count(nums[0])?,
                max_count: count(nums[1])?,
                min_size_m: nums[2],
                max_size_m: nums[3],
            })
        }
        "rooms" => want(2).map(|_| MapKind::Rooms { room_size_m: nums[0], door_width_m: nums[1] }),
        "utrap" => want(2).map(|_| MapKind::UTrap { arm_length_m: nums[0], inner_width_m: nums[1] }),
        _ => Err(Error::Config(format!("unknown map kind `{name}`"))),
    }
}
