//! Turns the merged key/value configuration into typed core settings.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use shapenav::apf::ApfParams;
use shapenav::ddpg::{DdpgConfig, TaskSetup};
use shapenav::eval::{parse_map_kind, ConfigMap, MapSource, PolicySource, SweepMap, SweepSpec};
use shapenav::neural::{NetworkShape, DEFAULT_WIDTH_MAX, DEFAULT_WIDTH_MIN};
use shapenav::obstacles::SfmParams;
use shapenav::shaping::PhaseConfig;
use shapenav::tasks::{ScenarioSpec, World, DEFAULT_PRM_CONNECT_RADIUS, DEFAULT_PRM_SAMPLES};
use shapenav::worldsim::{MapSpec, NoiseParams, OccupancyMap};
use shapenav::{RewardWeights, TaskConfig, TaskKind};

/// Every key any subcommand understands. Anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    "task",
    "weights",
    "max_steps",
    "map",
    "maps",
    "map_kind",
    "map_width",
    "map_height",
    "map_resolution",
    "map_seed",
    "sigma_lidar",
    "sigma_speed",
    "sigma_turning",
    "sigma_localize",
    "process_noise",
    "obstacles",
    "distance_bins",
    "dist_min",
    "dist_max",
    "actor_widths",
    "critic_widths",
    "gamma",
    "actor_lr",
    "critic_lr",
    "tau",
    "batch_size",
    "buffer_capacity",
    "exploration_std",
    "exploration_final_scale",
    "warmup_steps",
    "total_steps",
    "update_every",
    "eval_every",
    "eval_episodes",
    "trial_steps",
    "final_steps",
    "reward_trials",
    "reward_parallel",
    "network_trials",
    "network_parallel",
    "sigma0",
    "width_min",
    "width_max",
    "workers",
    "db",
    "policy",
    "episodes",
    "apf_attraction",
    "apf_repulsion",
    "apf_influence",
    "apf_lookahead",
    "apf_stuck_threshold",
    "trajectory",
];

/// Marks errors that come from bad input rather than a failed run.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub struct Settings {
    pub cfg: ConfigMap,
    pub seed: u64,
    pub out: PathBuf,
}

fn typed<T>(r: shapenav::Result<T>) -> Result<T> {
    r.map_err(|e| usage(e.to_string()))
}

impl Settings {
    /// File values first, then `--set` pairs, then the dedicated flags.
    pub fn build(config: Option<&Path>, sets: &[String], seed: Option<u64>, out: Option<&Path>) -> Result<Self> {
        let mut cfg = match config {
            Some(p) => ConfigMap::load(p).map_err(|e| usage(e.to_string()))?,
            None => ConfigMap::new(),
        };
        for s in sets {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("`--set {s}` is not key=value")))?;
            cfg.set(k.trim(), v.trim());
        }
        if let Some(s) = seed {
            cfg.set("seed", s.to_string());
        }
        if let Some(o) = out {
            cfg.set("out", o.display().to_string());
        }
        typed(cfg.check_keys(KNOWN_KEYS))?;
        let seed = typed(cfg.get_or("seed", 0u64))?;
        let out = PathBuf::from(cfg.raw("out").unwrap_or("out"));
        Ok(Self { cfg, seed, out })
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        typed(self.cfg.get_or(key, default))
    }

    fn list_or<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        typed(self.cfg.get_list_or(key, default))
    }

    /// A key that may hold a list but must hold exactly one value here.
    fn single<T: std::str::FromStr + Copy>(&self, key: &str, default: T) -> Result<T> {
        match self.list_or(key, vec![default])?.as_slice() {
            [v] => Ok(*v),
            _ => Err(usage(format!("`{key}` takes a single value for this command"))),
        }
    }

    pub fn out_file(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }

    pub fn task(&self) -> Result<TaskKind> {
        self.get_or("task", TaskKind::P2p)
    }

    pub fn task_config(&self) -> Result<TaskConfig> {
        let task = self.task()?;
        let mut tc = TaskConfig::new(task);
        if let Some(w) = typed(self.cfg.get_list::<f64>("weights"))? {
            tc = typed(tc.with_weights(typed(RewardWeights::new(task, w))?))?;
        }
        tc.max_steps = self.get_or("max_steps", tc.max_steps)?;
        if tc.max_steps == 0 {
            return Err(usage("max_steps must be positive"));
        }
        Ok(tc)
    }

    pub fn map_spec(&self) -> Result<MapSpec> {
        let kind = typed(parse_map_kind(self.cfg.raw("map_kind").unwrap_or("boxes:1:3:0.5:1.5")))?;
        Ok(MapSpec {
            width_m: self.get_or("map_width", 10.0)?,
            height_m: self.get_or("map_height", 10.0)?,
            resolution: self.get_or("map_resolution", 0.1)?,
            kind,
        })
    }

    pub fn map_seed(&self) -> Result<u64> {
        self.get_or("map_seed", self.seed)
    }

    /// `map` names a file; otherwise the map is generated.
    pub fn map(&self) -> Result<OccupancyMap> {
        match self.cfg.raw("map") {
            Some(p) => Ok(OccupancyMap::load(p)?),
            None => Ok(shapenav::worldsim::generate_map(&self.map_spec()?, self.map_seed()?)?),
        }
    }

    pub fn noise(&self) -> Result<NoiseParams> {
        let d = NoiseParams::default();
        let process = typed(self.cfg.get::<f64>("process_noise"))?;
        Ok(NoiseParams {
            sigma_lidar: self.single("sigma_lidar", d.sigma_lidar)?,
            sigma_speed: self.get_or("sigma_speed", process.unwrap_or(d.sigma_speed))?,
            sigma_turning: self.get_or("sigma_turning", process.unwrap_or(d.sigma_turning))?,
            sigma_localize: self.single("sigma_localize", d.sigma_localize)?,
        })
    }

    fn default_bin(task: TaskKind) -> (f64, f64) {
        match task {
            TaskKind::P2p => (5.0, 10.0),
            TaskKind::Pf => (35.0, f64::INFINITY),
        }
    }

    pub fn scenarios(&self, task: TaskKind) -> Result<ScenarioSpec> {
        let (lo, hi) = Self::default_bin(task);
        Ok(ScenarioSpec {
            min_distance: self.get_or("dist_min", lo)?,
            max_distance: self.get_or("dist_max", hi)?,
            obstacles: self.single("obstacles", 0usize)?,
            sfm: SfmParams::default(),
            margin: 0.1,
        })
    }

    pub fn task_setup(&self) -> Result<TaskSetup> {
        let task = self.task_config()?;
        let scenarios = self.scenarios(task.task)?;
        let map = self.map()?;
        let world = if task.task == TaskKind::Pf || scenarios.obstacles > 0 {
            World::with_roadmap(map, DEFAULT_PRM_SAMPLES, DEFAULT_PRM_CONNECT_RADIUS, self.map_seed()? ^ 0x5052_4d00)
        } else {
            World::without_roadmap(map)
        };
        Ok(TaskSetup { world, task, scenarios, noise: self.noise()? })
    }

    pub fn actor_shape(&self) -> Result<NetworkShape> {
        let w = self.list_or("actor_widths", vec![64, 64, 64])?;
        if w.len() != 3 || w.contains(&0) {
            bail!(usage("actor_widths needs three positive widths"));
        }
        Ok(NetworkShape::new(w))
    }

    pub fn critic_shape(&self) -> Result<NetworkShape> {
        let w = self.list_or("critic_widths", vec![64, 64, 64, 64])?;
        if w.len() != 4 || w.contains(&0) {
            bail!(usage("critic_widths needs four positive widths"));
        }
        Ok(NetworkShape::new(w))
    }

    /// DDPG settings, with `steps_key` overriding the training length.
    pub fn ddpg(&self, steps_key: Option<&str>) -> Result<DdpgConfig> {
        let d = DdpgConfig::default();
        let mut total = self.get_or("total_steps", d.total_steps)?;
        if let Some(k) = steps_key {
            total = self.get_or(k, total)?;
        }
        let std = self.list_or("exploration_std", d.noise_std.to_vec())?;
        let [sv, sw] = std[..] else { bail!(usage("exploration_std needs two values")) };
        let cfg = DdpgConfig {
            gamma: self.get_or("gamma", d.gamma)?,
            actor_lr: self.get_or("actor_lr", d.actor_lr)?,
            critic_lr: self.get_or("critic_lr", d.critic_lr)?,
            tau: self.get_or("tau", d.tau)?,
            batch_size: self.get_or("batch_size", d.batch_size)?,
            buffer_capacity: self.get_or("buffer_capacity", d.buffer_capacity)?,
            noise_std: [sv, sw],
            noise_final_scale: self.get_or("exploration_final_scale", d.noise_final_scale)?,
            warmup_steps: self.get_or("warmup_steps", d.warmup_steps.min(total))?,
            total_steps: total,
            update_every: self.get_or("update_every", d.update_every)?,
            eval_every: self.get_or("eval_every", d.eval_every)?,
            eval_episodes: self.get_or("eval_episodes", d.eval_episodes)?,
            finite_check_every: d.finite_check_every,
        };
        typed(cfg.validate())?;
        Ok(cfg)
    }

    pub fn phase(&self, trials_key: &str, parallel_key: &str, default_trials: usize) -> Result<PhaseConfig> {
        let mut p = PhaseConfig::new(self.get_or(trials_key, default_trials)?, self.get_or(parallel_key, 4)?);
        p.workers = self.get_or("workers", 1)?;
        p.sigma0 = self.get_or("sigma0", p.sigma0)?;
        if p.workers == 0 {
            bail!(usage("workers must be at least 1"));
        }
        Ok(p)
    }

    pub fn width_bounds(&self) -> Result<(usize, usize)> {
        Ok((self.get_or("width_min", DEFAULT_WIDTH_MIN)?, self.get_or("width_max", DEFAULT_WIDTH_MAX)?))
    }

    pub fn db_path(&self) -> Result<PathBuf> {
        match self.cfg.raw("db") {
            Some(p) => Ok(PathBuf::from(p)),
            None => self.out_file("trials.db"),
        }
    }

    pub fn apf(&self) -> Result<ApfParams> {
        let d = ApfParams::default();
        let p = ApfParams {
            attraction_gain: self.get_or("apf_attraction", d.attraction_gain)?,
            repulsion_gain: self.get_or("apf_repulsion", d.repulsion_gain)?,
            influence_distance: self.get_or("apf_influence", d.influence_distance)?,
            lookahead: self.get_or("apf_lookahead", d.lookahead)?,
            stuck_threshold: self.get_or("apf_stuck_threshold", d.stuck_threshold)?,
            ..d
        };
        typed(p.validate())?;
        Ok(p)
    }

    fn distance_bins(&self, task: TaskKind) -> Result<Vec<(f64, f64)>> {
        let Some(raw) = self.cfg.raw("distance_bins") else {
            let (lo, hi) = Self::default_bin(task);
            return Ok(vec![(self.get_or("dist_min", lo)?, self.get_or("dist_max", hi)?)]);
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|b| {
                let (lo, hi) = b.split_once('-').ok_or_else(|| usage(format!("distance bin `{b}` is not min-max")))?;
                let p = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad distance `{s}`")));
                Ok((p(lo)?, p(hi)?))
            })
            .collect()
    }

    fn sweep_maps(&self) -> Result<Vec<SweepMap>> {
        if let Some(list) = self.cfg.raw("maps") {
            return Ok(list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|p| SweepMap { name: p.to_string(), source: MapSource::File(PathBuf::from(p)) })
                .collect());
        }
        if let Some(p) = self.cfg.raw("map") {
            return Ok(vec![SweepMap { name: p.to_string(), source: MapSource::File(PathBuf::from(p)) }]);
        }
        let name = self.cfg.raw("map_kind").unwrap_or("boxes:1:3:0.5:1.5").to_string();
        Ok(vec![SweepMap { name, source: MapSource::Generated { spec: self.map_spec()?, seed: self.map_seed()? } }])
    }

    /// `policy` is `apf`, `scripted`, or a path to a saved actor.
    pub fn sweep(&self, forced: Option<PolicySource>) -> Result<SweepSpec> {
        let task = self.task_config()?;
        let policy = match forced {
            Some(p) => p,
            None => match self.cfg.raw("policy") {
                Some("apf") => PolicySource::Apf(self.apf()?),
                Some("scripted") => PolicySource::Scripted,
                Some(path) => PolicySource::File(PathBuf::from(path)),
                None => return Err(anyhow!(usage("eval needs `policy` (apf, scripted or an actor file)"))),
            },
        };
        let d = NoiseParams::default();
        let process_default = typed(self.cfg.get::<f64>("sigma_speed"))?.unwrap_or(d.sigma_speed);
        let kind = task.task;
        let mut spec = SweepSpec::new(policy, task, self.sweep_maps()?);
        spec.episodes = self.get_or("episodes", 100)?;
        spec.sigma_lidar = self.list_or("sigma_lidar", vec![d.sigma_lidar])?;
        spec.sigma_localize = self.list_or("sigma_localize", vec![d.sigma_localize])?;
        spec.process_noise = self.list_or("process_noise", vec![process_default])?;
        spec.obstacle_counts = self.list_or("obstacles", vec![0])?;
        spec.distance_bins = self.distance_bins(kind)?;
        spec.master_seed = self.seed;
        spec.workers = self.get_or("workers", 1)?;
        typed(spec.validate())?;
        Ok(spec)
    }
}
