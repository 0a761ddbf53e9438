use std::fmt::Write as _;
use std::sync::Mutex;

use rand::Rng;

use super::cmaes::Cmaes;
use super::db::{Phase, TrialDb, TrialRecord, TrialStatus};
use crate::ddpg::{evaluate_policy, train, DdpgConfig, TaskSetup};
use crate::error::{Error, Result};
use crate::neural::{Actor, Critic, NetworkShape};
use crate::rng::{derive_seed, stream, Stream};
use crate::tasks::{RewardWeights, TaskKind};

/// Number of continuous width coordinates: three actor and four critic widths.
pub const NETWORK_DIMS: usize = 7;

/// Everything one trial needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub phase: Phase,
    pub trial_id: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub actor: NetworkShape,
    pub critic: NetworkShape,
}

/// Scores trials. Phase-1 scores are true objectives, phase-2 scores are
/// cumulative rewards; the runner decides how to compute each.
pub trait TrialRunner: Sync {
    fn run(&self, trial: &TrialSpec) -> Result<f64>;

    /// Train the final policy. Runners without a learner return `None`.
    fn train_final(&self, _trial: &TrialSpec) -> Result<Option<(Actor, Critic)>> {
        Ok(None)
    }
}

/// Deterministic objective that skips training, for tests and dry runs.
pub struct SurrogateRunner<F: Fn(&TrialSpec) -> Result<f64> + Sync>(pub F);

impl<F: Fn(&TrialSpec) -> Result<f64> + Sync> TrialRunner for SurrogateRunner<F> {
    fn run(&self, trial: &TrialSpec) -> Result<f64> {
        (self.0)(trial)
    }
}

/// Trains with DDPG and evaluates without exploration noise.
#[derive(Debug, Clone)]
pub struct DdpgRunner {
    pub setup: TaskSetup,
    pub ddpg: DdpgConfig,
    /// Training budget for the final policy.
    pub final_ddpg: DdpgConfig,
    pub eval_episodes: usize,
}

impl DdpgRunner {
    fn setup_for(&self, trial: &TrialSpec) -> Result<TaskSetup> {
        let mut setup = self.setup.clone();
        setup.task = setup.task.with_weights(trial.weights.clone())?;
        Ok(setup)
    }
}

impl TrialRunner for DdpgRunner {
    fn run(&self, trial: &TrialSpec) -> Result<f64> {
        let setup = self.setup_for(trial)?;
        let out = train(&setup, &trial.actor, &trial.critic, &self.ddpg, trial.seed)?;
        let eval_seed = derive_seed(trial.seed, Stream::Evaluation as u64);
        let s = evaluate_policy(&mut &out.actor, &setup, self.eval_episodes, eval_seed)?;
        Ok(match trial.phase {
            Phase::RewardShaping => s.mean_objective,
            Phase::NetworkShaping => s.mean_return,
        })
    }

    fn train_final(&self, trial: &TrialSpec) -> Result<Option<(Actor, Critic)>> {
        let setup = self.setup_for(trial)?;
        let out = train(&setup, &trial.actor, &trial.critic, &self.final_ddpg, trial.seed)?;
        Ok(Some((out.actor, out.critic)))
    }
}

/// Budget and tuner settings for one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    /// Total trials.
    pub n_g: usize,
    /// Parallel slots, random warm-start size and CMA-ES population.
    pub n_mc: usize,
    /// Worker threads; capped at `n_mc`.
    pub workers: usize,
    /// Initial CMA-ES step size in normalized box coordinates.
    pub sigma0: f64,
    /// Whether the first `n_mc` trials are drawn uniformly from the box.
    pub random_warm_start: bool,
}

impl PhaseConfig {
    pub fn new(n_g: usize, n_mc: usize) -> Self {
        Self { n_g, n_mc, workers: 1, sigma0: 0.3, random_warm_start: true }
    }

    fn validate(&self) -> Result<()> {
        if self.n_mc < 2 && self.n_g > self.n_mc {
            return Err(Error::Config("n_mc must be at least 2 for CMA-ES generations".into()));
        }
        if self.n_mc > self.n_g && self.n_g > 0 {
            return Err(Error::Config("n_mc must not exceed n_g".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        Ok(())
    }
}

/// Maps normalized coordinates in `[0,1]^d` to trial parameters.
trait Space {
    fn phase(&self) -> Phase;
    fn dim(&self) -> usize;
    /// Stored parameters for normalized point `u`.
    fn params(&self, u: &[f64]) -> Vec<f64>;
    fn spec(&self, trial_id: usize, seed: u64, params: &[f64]) -> Result<TrialSpec>;
}

struct RewardSpace {
    task: TaskKind,
    actor: NetworkShape,
    critic: NetworkShape,
}

impl Space for RewardSpace {
    fn phase(&self) -> Phase {
        Phase::RewardShaping
    }
    fn dim(&self) -> usize {
        self.task.reward_terms()
    }
    fn params(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn spec(&self, trial_id: usize, seed: u64, params: &[f64]) -> Result<TrialSpec> {
        Ok(TrialSpec {
            phase: Phase::RewardShaping,
            trial_id,
            seed,
            weights: RewardWeights::new(self.task, params.to_vec())?,
            actor: self.actor.clone(),
            critic: self.critic.clone(),
        })
    }
}

struct NetworkSpace {
    weights: RewardWeights,
    min: usize,
    max: usize,
}

impl Space for NetworkSpace {
    fn phase(&self) -> Phase {
        Phase::NetworkShaping
    }
    fn dim(&self) -> usize {
        NETWORK_DIMS
    }
    fn params(&self, u: &[f64]) -> Vec<f64> {
        let (lo, hi) = (self.min as f64, self.max as f64);
        u.iter().map(|x| lo + x * (hi - lo)).collect()
    }
    fn spec(&self, trial_id: usize, seed: u64, params: &[f64]) -> Result<TrialSpec> {
        let w: Vec<usize> =
            params.iter().map(|p| (p.round() as usize).clamp(self.min, self.max)).collect();
        Ok(TrialSpec {
            phase: Phase::NetworkShaping,
            trial_id,
            seed,
            weights: self.weights.clone(),
            actor: NetworkShape::actor(w[0], w[1], w[2]),
            critic: NetworkShape::critic(w[3], w[4], w[5], w[6]),
        })
    }
}

fn phase_code(p: Phase) -> u64 {
    match p {
        Phase::RewardShaping => 1,
        Phase::NetworkShaping => 2,
    }
}

/// Run every trial in `batch`, at most `workers` at a time, returning
/// `(objective or None on failure)` in batch order.
fn execute(runner: &dyn TrialRunner, batch: &[TrialSpec], workers: usize) -> Vec<Option<f64>> {
    let results: Vec<Mutex<Option<Option<f64>>>> = batch.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, batch.len().max(1)) {
            s.spawn(|| loop {
                let k = {
                    let mut n = next.lock().unwrap();
                    let k = *n;
                    *n += 1;
                    k
                };
                let Some(trial) = batch.get(k) else { break };
                let score = runner.run(trial).ok().filter(|v| v.is_finite());
                *results[k].lock().unwrap() = Some(score);
            });
        }
    });
    results.into_iter().map(|m| m.into_inner().unwrap().flatten()).collect()
}

/// Shared driver for both phases. Trials already final in `db` are reused
/// instead of being run again, so an interrupted run resumes where it stopped.
fn run_phase(
    space: &dyn Space,
    cfg: &PhaseConfig,
    runner: &dyn TrialRunner,
    db: &mut TrialDb,
    master_seed: u64,
) -> Result<Option<TrialRecord>> {
    cfg.validate()?;
    let phase = space.phase();
    let root = derive_seed(master_seed, phase_code(phase));
    let mut tuner_rng = stream(root, Stream::Tuner);
    let d = space.dim();
    let mut es: Option<Cmaes> = None;
    let mut worst = f64::INFINITY;
    let mut next_id = 0usize;

    while next_id < cfg.n_g {
        let warm = cfg.random_warm_start && next_id == 0;
        let units: Vec<Vec<f64>> = if warm {
            (0..cfg.n_mc).map(|_| (0..d).map(|_| tuner_rng.gen_range(0.0..=1.0)).collect()).collect()
        } else {
            let es = es.get_or_insert_with(|| {
                let mean = best_unit(space, db, phase).unwrap_or_else(|| vec![0.5; d]);
                Cmaes::with_bounds(mean, cfg.sigma0, cfg.n_mc, vec![0.0; d], vec![1.0; d])
            });
            es.ask(&mut tuner_rng)
        };
        let count = units.len().min(cfg.n_g - next_id);
        let specs: Vec<TrialSpec> = (0..count)
            .map(|k| {
                let id = next_id + k;
                space.spec(id, derive_seed(root, id as u64), &space.params(&units[k]))
            })
            .collect::<Result<_>>()?;

        // Reuse recorded outcomes; queue the rest.
        let mut scores: Vec<Option<Option<f64>>> = vec![None; count];
        let mut pending = Vec::new();
        for (k, spec) in specs.iter().enumerate() {
            let params = space.params(&units[k]);
            match db.get(phase, spec.trial_id) {
                Some(r) if r.status.is_final() => {
                    if r.params != params || r.seed != spec.seed {
                        return Err(Error::Config(format!(
                            "trial database disagrees with the tuner at {phase} trial {}; was it written with another seed or config?",
                            spec.trial_id
                        )));
                    }
                    scores[k] = Some((r.status == TrialStatus::Completed).then_some(r.objective));
                }
                _ => pending.push(k),
            }
        }
        for &k in &pending {
            db.append(TrialRecord {
                trial_id: specs[k].trial_id,
                phase,
                status: TrialStatus::Running,
                seed: specs[k].seed,
                objective: f64::NAN,
                params: space.params(&units[k]),
            })?;
        }
        let batch: Vec<TrialSpec> = pending.iter().map(|&k| specs[k].clone()).collect();
        let results = execute(runner, &batch, cfg.workers.min(cfg.n_mc));
        for (&k, res) in pending.iter().zip(results) {
            db.append(TrialRecord {
                trial_id: specs[k].trial_id,
                phase,
                status: if res.is_some() { TrialStatus::Completed } else { TrialStatus::Failed },
                seed: specs[k].seed,
                objective: res.unwrap_or(f64::NAN),
                params: space.params(&units[k]),
            })?;
            scores[k] = Some(res);
        }

        let scores: Vec<Option<f64>> = scores.into_iter().map(Option::unwrap).collect();
        for s in scores.iter().flatten() {
            worst = worst.min(*s);
        }
        if !warm && count == units.len() {
            // Failed trials rank below everything seen so far.
            let fallback = if worst.is_finite() { worst - 1.0 } else { -1.0 };
            let losses: Vec<f64> = scores.iter().map(|s| -s.unwrap_or(fallback)).collect();
            es.as_mut().expect("tuner exists after warm start").tell(&units, &losses)?;
        }
        next_id += count;
    }
    Ok(db.best(phase))
}

/// Normalized coordinates of the best completed trial so far.
fn best_unit(space: &dyn Space, db: &TrialDb, phase: Phase) -> Option<Vec<f64>> {
    let best = db.best(phase)?;
    let zero = space.params(&vec![0.0; space.dim()]);
    let one = space.params(&vec![1.0; space.dim()]);
    Some(
        best.params
            .iter()
            .zip(zero.iter().zip(&one))
            .map(|(p, (lo, hi))| if hi > lo { ((p - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 })
            .collect(),
    )
}

/// Phase 1: search reward weights with fixed networks, scored by true objective.
pub fn shape_rewards(
    task: TaskKind,
    actor: &NetworkShape,
    critic: &NetworkShape,
    cfg: &PhaseConfig,
    runner: &dyn TrialRunner,
    db: &mut TrialDb,
    master_seed: u64,
) -> Result<(RewardWeights, TrialRecord)> {
    let space = RewardSpace { task, actor: actor.clone(), critic: critic.clone() };
    let best = run_phase(&space, cfg, runner, db, master_seed)?.ok_or(Error::NoCompletedTrials("reward"))?;
    Ok((RewardWeights::new(task, best.params.clone())?, best))
}

/// Phase 2: search network widths in `[min, max]` with fixed reward weights,
/// scored by cumulative reward.
pub fn shape_networks(
    weights: &RewardWeights,
    bounds: (usize, usize),
    cfg: &PhaseConfig,
    runner: &dyn TrialRunner,
    db: &mut TrialDb,
    master_seed: u64,
) -> Result<(NetworkShape, NetworkShape, TrialRecord)> {
    if bounds.0 == 0 || bounds.0 > bounds.1 {
        return Err(Error::Config("network width bounds must satisfy 1 <= min <= max".into()));
    }
    let space = NetworkSpace { weights: weights.clone(), min: bounds.0, max: bounds.1 };
    let best = run_phase(&space, cfg, runner, db, master_seed)?.ok_or(Error::NoCompletedTrials("network"))?;
    let spec = space.spec(best.trial_id, best.seed, &best.params)?;
    Ok((spec.actor, spec.critic, best))
}

/// Settings for both phases and the final run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingConfig {
    pub task: TaskKind,
    pub reward_phase: PhaseConfig,
    pub network_phase: PhaseConfig,
    /// Fixed shapes used in phase 1 and whenever phase 2 has no trials.
    pub default_actor: NetworkShape,
    pub default_critic: NetworkShape,
    pub width_bounds: (usize, usize),
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
pub struct ShapingReport {
    pub reward_best: TrialRecord,
    pub network_best: Option<TrialRecord>,
    pub weights: RewardWeights,
    pub actor_shape: NetworkShape,
    pub critic_shape: NetworkShape,
    pub final_actor: Option<Actor>,
    pub final_critic: Option<Critic>,
}

impl ShapingReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task {}", self.weights.task());
        let _ = writeln!(s, "reward_best_trial {}", self.reward_best.trial_id);
        let _ = writeln!(s, "reward_best_objective {}", self.reward_best.objective);
        let _ = writeln!(s, "reward_weights {}", join(self.weights.as_slice()));
        match &self.network_best {
            Some(r) => {
                let _ = writeln!(s, "network_best_trial {}", r.trial_id);
                let _ = writeln!(s, "network_best_objective {}", r.objective);
                let _ = writeln!(s, "network_params {}", join(&r.params));
            }
            None => {
                let _ = writeln!(s, "network_best_trial none");
            }
        }
        let _ = writeln!(s, "actor_widths {}", join(&self.actor_shape.widths));
        let _ = writeln!(s, "critic_widths {}", join(&self.critic_shape.widths));
        let _ = writeln!(s, "final_policy {}", if self.final_actor.is_some() { "trained" } else { "none" });
        s
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Phase 1, then phase 2, then one final training run with the winners.
pub fn run_full_shaping(cfg: &ShapingConfig, runner: &dyn TrialRunner, db: &mut TrialDb) -> Result<ShapingReport> {
    let (weights, reward_best) = shape_rewards(
        cfg.task,
        &cfg.default_actor,
        &cfg.default_critic,
        &cfg.reward_phase,
        runner,
        db,
        cfg.master_seed,
    )?;
    let (actor_shape, critic_shape, network_best) = if cfg.network_phase.n_g == 0 {
        (cfg.default_actor.clone(), cfg.default_critic.clone(), None)
    } else {
        let (a, c, r) = shape_networks(&weights, cfg.width_bounds, &cfg.network_phase, runner, db, cfg.master_seed)?;
        (a, c, Some(r))
    };
    let final_spec = TrialSpec {
        phase: Phase::NetworkShaping,
        trial_id: usize::MAX,
        seed: derive_seed(cfg.master_seed, 3),
        weights: weights.clone(),
        actor: actor_shape.clone(),
        critic: critic_shape.clone(),
    };
    let trained = runner.train_final(&final_spec)?;
    let (final_actor, final_critic) = match trained {
        Some((a, c)) => (Some(a), Some(c)),
        None => (None, None),
    };
    Ok(ShapingReport { reward_best, network_best, weights, actor_shape, critic_shape, final_actor, final_critic })
}
