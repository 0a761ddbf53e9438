//! Grid sweeps over noise levels, obstacle counts and start–goal distances.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::atomic::AtomicBool;
use std::sync::Mutex;

use crate::apf::{ApfParams, ApfPolicy};
use crate::error::{Error, Result};
use crate::geometry::{to_robot_frame, wrap_angle, Vec2};
use crate::neural::{load_actor, Actor};
use crate::obstacles::SfmParams;
use crate::rng::derive_seed;
use crate::tasks::{
    run_episode, sample_episode, EpisodeResult, Outcome, Policy, ScenarioSpec, StepView, TaskConfig, TaskKind,
    World, DEFAULT_PRM_CONNECT_RADIUS, DEFAULT_PRM_SAMPLES,
};
use crate::worldsim::{generate_map, Action, MapSpec, NoiseParams, OccupancyMap, V_MAX, W_MAX, W_MIN};

/// Where the evaluated controller comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Serialized actor network.
    File(PathBuf),
    /// Already-loaded actor network.
    Network(Actor),
    Apf(ApfParams),
    /// Turn toward the goal (or the next unreached waypoint) and drive.
    Scripted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    File(PathBuf),
    Generated { spec: MapSpec, seed: u64 },
}

/// One named map of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMap {
    pub name: String,
    pub source: MapSource,
}

impl SweepMap {
    pub fn load(&self) -> Result<OccupancyMap> {
        match &self.source {
            MapSource::File(p) => OccupancyMap::load(p),
            MapSource::Generated { spec, seed } => generate_map(spec, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub policy: PolicySource,
    pub task: TaskConfig,
    pub maps: Vec<SweepMap>,
    pub episodes: usize,
    pub sigma_lidar: Vec<f64>,
    pub sigma_localize: Vec<f64>,
    /// Applied to both the speed and the turning-rate noise.
    pub process_noise: Vec<f64>,
    pub obstacle_counts: Vec<usize>,
    /// Start–goal distance bins `[min, max)`, m. Path following uses the minimum.
    pub distance_bins: Vec<(f64, f64)>,
    pub sfm: SfmParams,
    pub master_seed: u64,
    pub workers: usize,
}

pub const MAX_SWEEP_OBSTACLES: usize = 40;

impl SweepSpec {
    /// A single-cell sweep at the default noise levels.
    pub fn new(policy: PolicySource, task: TaskConfig, maps: Vec<SweepMap>) -> Self {
        let n = NoiseParams::default();
        let bin = match task.task {
            TaskKind::P2p => (5.0, 10.0),
            TaskKind::Pf => (35.0, f64::INFINITY),
        };
        Self {
            policy,
            task,
            maps,
            episodes: 100,
            sigma_lidar: vec![n.sigma_lidar],
            sigma_localize: vec![n.sigma_localize],
            process_noise: vec![n.sigma_speed],
            obstacle_counts: vec![0],
            distance_bins: vec![bin],
            sfm: SfmParams::default(),
            master_seed: 0,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episode count must be at least 1".into()));
        }
        if self.maps.is_empty()
            || self.sigma_lidar.is_empty()
            || self.sigma_localize.is_empty()
            || self.process_noise.is_empty()
            || self.obstacle_counts.is_empty()
            || self.distance_bins.is_empty()
        {
            return Err(Error::Config("every sweep grid needs at least one value".into()));
        }
        let sigmas = self.sigma_lidar.iter().chain(&self.sigma_localize).chain(&self.process_noise);
        if sigmas.clone().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("noise levels must be finite and non-negative".into()));
        }
        if self.obstacle_counts.iter().any(|&c| c > MAX_SWEEP_OBSTACLES) {
            return Err(Error::Config(format!("obstacle counts are limited to {MAX_SWEEP_OBSTACLES}")));
        }
        if self.distance_bins.iter().any(|&(lo, hi)| !(lo >= 0.0 && hi >= lo)) {
            return Err(Error::Config("distance bins need 0 <= min <= max".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Cartesian product of the grids in row-major order: map, lidar,
    /// localization, process noise, obstacles, distance bin.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (mi, m) in self.maps.iter().enumerate() {
            for &sl in &self.sigma_lidar {
                for &sz in &self.sigma_localize {
                    for &sp in &self.process_noise {
                        for &ob in &self.obstacle_counts {
                            for &bin in &self.distance_bins {
                                out.push(Cell {
                                    map: m.name.clone(),
                                    map_index: mi,
                                    sigma_lidar: sl,
                                    sigma_localize: sz,
                                    process_noise: sp,
                                    obstacles: ob,
                                    distance_bin: bin,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub map: String,
    pub map_index: usize,
    pub sigma_lidar: f64,
    pub sigma_localize: f64,
    pub process_noise: f64,
    pub obstacles: usize,
    pub distance_bin: (f64, f64),
}

impl Cell {
    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            sigma_lidar: self.sigma_lidar,
            sigma_speed: self.process_noise,
            sigma_turning: self.process_noise,
            sigma_localize: self.sigma_localize,
        }
    }

    fn csv_prefix(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.map,
            self.sigma_lidar,
            self.sigma_localize,
            self.process_noise,
            self.obstacles,
            self.distance_bin.0,
            self.distance_bin.1
        )
    }
}

const CELL_HEADER: &str = "map,sigma_lidar,sigma_localize,process_noise,obstacles,dist_min,dist_max";

/// One evaluated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub cell: usize,
    pub episode: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub true_objective: f64,
    pub success: bool,
    pub steps: usize,
    pub path_length: f64,
    pub finish_time: f64,
    pub cumulative_reward: f64,
}

impl EpisodeRecord {
    fn from_result(cell: usize, episode: usize, seed: u64, r: &EpisodeResult) -> Self {
        Self {
            cell,
            episode,
            seed,
            outcome: r.outcome,
            true_objective: r.true_objective,
            success: r.success(),
            steps: r.steps,
            path_length: r.path_length,
            finish_time: r.finish_time,
            cumulative_reward: r.cumulative_reward,
        }
    }
}

pub const EPISODE_HEADER: &str =
    "cell,episode,seed,outcome,true_objective,success,steps,path_length,finish_time,cumulative_reward";

pub fn episodes_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from(EPISODE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.episode,
            r.seed,
            r.outcome,
            r.true_objective,
            u8::from(r.success),
            r.steps,
            r.path_length,
            r.finish_time,
            r.cumulative_reward
        );
    }
    out
}

/// Aggregate metrics for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub cell: Cell,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean over successful episodes only; NaN when there are none.
    pub mean_path_length: f64,
    pub mean_finish_time: f64,
    /// Mean true objective over all episodes (fractional for path following).
    pub mean_objective: f64,
}

impl MetricsRow {
    pub fn aggregate(cell: Cell, records: &[&EpisodeRecord]) -> Self {
        let n = records.len();
        let wins: Vec<_> = records.iter().filter(|r| r.success).collect();
        let mean = |xs: &mut dyn Iterator<Item = f64>, k: usize| {
            if k == 0 {
                f64::NAN
            } else {
                xs.sum::<f64>() / k as f64
            }
        };
        Self {
            cell,
            episodes: n,
            successes: wins.len(),
            success_rate: if n == 0 { 0.0 } else { wins.len() as f64 / n as f64 },
            mean_path_length: mean(&mut wins.iter().map(|r| r.path_length), wins.len()),
            mean_finish_time: mean(&mut wins.iter().map(|r| r.finish_time), wins.len()),
            mean_objective: mean(&mut records.iter().map(|r| r.true_objective), n),
        }
    }
}

pub const METRICS_HEADER_TAIL: &str = "episodes,successes,success_rate,mean_path_length,mean_finish_time,mean_objective";

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{CELL_HEADER},{METRICS_HEADER_TAIL}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.cell.csv_prefix(),
            r.episodes,
            r.successes,
            r.success_rate,
            r.mean_path_length,
            r.mean_finish_time,
            r.mean_objective
        );
    }
    out
}

/// Rebuild metrics rows from episode records, in cell order.
pub fn aggregate(cells: &[Cell], records: &[EpisodeRecord]) -> Vec<MetricsRow> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mine: Vec<&EpisodeRecord> = records.iter().filter(|r| r.cell == i).collect();
            MetricsRow::aggregate(c.clone(), &mine)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<MetricsRow>,
    /// Ordered by cell, then episode.
    pub episodes: Vec<EpisodeRecord>,
}

/// Steering controller used for the `Scripted` policy source.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeekPolicy;

impl Policy for SeekPolicy {
    fn act(&mut self, view: &StepView<'_>) -> Action {
        let target = match view.path.and_then(|p| p.first_unreached().map(|i| p.waypoints()[i])) {
            Some(w) => w,
            None => view.goal,
        };
        let rel: Vec2 = to_robot_frame(target, view.believed.position(), view.believed.heading);
        let err = wrap_angle(rel.y.atan2(rel.x));
        let v = if err.abs() < std::f64::consts::FRAC_PI_2 { V_MAX * err.cos() } else { 0.0 };
        Action::new(v, (2.0 * err).clamp(W_MIN, W_MAX))
    }
}

enum Controller {
    Network(Actor),
    Apf(ApfParams),
    Scripted,
}

impl Controller {
    fn load(source: &PolicySource, task: &TaskConfig) -> Result<Self> {
        let c = match source {
            PolicySource::File(p) => Controller::Network(load_actor(p)?),
            PolicySource::Network(a) => Controller::Network(a.clone()),
            PolicySource::Apf(p) => {
                p.validate()?;
                Controller::Apf(p.clone())
            }
            PolicySource::Scripted => Controller::Scripted,
        };
        if let Controller::Network(a) = &c {
            if a.input_dim() != task.observation_width() {
                return Err(Error::DimensionMismatch { expected: task.observation_width(), got: a.input_dim() });
            }
        }
        Ok(c)
    }

    fn policy(&self) -> Box<dyn Policy + '_> {
        match self {
            Controller::Network(a) => Box::new(a),
            Controller::Apf(p) => Box::new(ApfPolicy::new(p.clone())),
            Controller::Scripted => Box::new(SeekPolicy),
        }
    }
}

/// Seed for episode `k` on map `m`. It does not depend on the noise or
/// obstacle coordinates, so cells on one map see matched start/goal draws.
pub fn episode_seed(master: u64, map_index: usize, k: usize) -> u64 {
    derive_seed(derive_seed(master, map_index as u64), k as u64)
}

fn build_worlds(spec: &SweepSpec) -> Result<Vec<World>> {
    let needs_roadmap = spec.task.task == TaskKind::Pf || spec.obstacle_counts.iter().any(|&c| c > 0);
    spec.maps
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let map = m.load()?;
            Ok(if needs_roadmap {
                let seed = derive_seed(spec.master_seed ^ 0x524f_4144, i as u64);
                World::with_roadmap(map, DEFAULT_PRM_SAMPLES, DEFAULT_PRM_CONNECT_RADIUS, seed)
            } else {
                World::without_roadmap(map)
            })
        })
        .collect()
}

fn cell_scenarios(spec: &SweepSpec, cell: &Cell) -> ScenarioSpec {
    ScenarioSpec {
        min_distance: cell.distance_bin.0,
        max_distance: cell.distance_bin.1,
        obstacles: cell.obstacles,
        sfm: spec.sfm.clone(),
        margin: 0.1,
    }
}

fn run_cell(
    spec: &SweepSpec,
    controller: &Controller,
    worlds: &[World],
    index: usize,
    cell: &Cell,
) -> Result<Vec<EpisodeRecord>> {
    let world = &worlds[cell.map_index];
    let scenarios = cell_scenarios(spec, cell);
    (0..spec.episodes)
        .map(|k| {
            let seed = episode_seed(spec.master_seed, cell.map_index, k);
            let (scenario, obstacles) = sample_episode(world, &spec.task, &scenarios, seed)?;
            let mut policy = controller.policy();
            let r = run_episode(&spec.task, &world.map, scenario, obstacles, &mut *policy, cell.noise(), seed)?;
            Ok(EpisodeRecord::from_result(index, k, seed, &r))
        })
        .collect()
}

/// Evaluate every cell. Output order and content depend only on the spec,
/// never on the worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let controller = Controller::load(&spec.policy, &spec.task)?;
    let worlds = build_worlds(spec)?;
    let cells = spec.cells();
    let results: Vec<Mutex<Option<Result<Vec<EpisodeRecord>>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    std::thread::scope(|s| {
        for _ in 0..spec.workers.min(cells.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() || failed.load(Ordering::Relaxed) {
                    break;
                }
                let r = run_cell(spec, &controller, &worlds, i, &cells[i]);
                if r.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                *results[i].lock().expect("sweep result lock") = Some(r);
            });
        }
    });
    let mut episodes = Vec::with_capacity(cells.len() * spec.episodes);
    // Cells are claimed in order, so every cell before a failing one has
    // finished and the first error found here is the lowest-indexed one.
    for slot in results {
        if let Some(r) = slot.into_inner().expect("sweep result lock") {
            episodes.extend(r?);
        }
    }
    let rows = aggregate(&cells, &episodes);
    Ok(SweepOutput { rows, episodes })
}

/// Re-simulate episode `k` of cell `cell` with its full trajectory.
pub fn rerun_episode(spec: &SweepSpec, cell: usize, k: usize) -> Result<EpisodeResult> {
    spec.validate()?;
    let cells = spec.cells();
    let c = cells.get(cell).ok_or_else(|| Error::Config(format!("cell {cell} is outside the sweep")))?;
    if k >= spec.episodes {
        return Err(Error::Config(format!("episode {k} is outside the sweep")));
    }
    let controller = Controller::load(&spec.policy, &spec.task)?;
    let worlds = build_worlds(spec)?;
    let world = &worlds[c.map_index];
    let scenarios = cell_scenarios(spec, c);
    let seed = episode_seed(spec.master_seed, c.map_index, k);
    let (scenario, obstacles) = sample_episode(world, &spec.task, &scenarios, seed)?;
    let mut policy = controller.policy();
    run_episode(&spec.task, &world.map, scenario, obstacles, &mut *policy, c.noise(), seed)
}
