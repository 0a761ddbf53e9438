use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use super::agent::DdpgAgent;
use super::replay::{ReplayBuffer, Transition};
use super::DdpgConfig;
use crate::error::{Error, Result};
use crate::neural::{Actor, Critic, NetworkShape};
use crate::rng::{derive_seed, stream, Stream};
use crate::tasks::{run_episode, sample_episode, Episode, Policy, ScenarioSpec, TaskConfig, World};
use crate::worldsim::{Action, NoiseParams, V_MAX, V_MIN, W_MAX, W_MIN};

/// World, task definition, scenario distribution and noise: everything an
/// episode needs besides a policy and a seed.
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub world: World,
    pub task: TaskConfig,
    pub scenarios: ScenarioSpec,
    pub noise: NoiseParams,
}

impl TaskSetup {
    /// Build the episode for `seed`, returning `None` when it is already
    /// over at setup (start inside the goal region).
    pub fn episode(&self, seed: u64) -> Result<Option<Episode<'_>>> {
        let (scenario, obstacles) = sample_episode(&self.world, &self.task, &self.scenarios, seed)?;
        let ep = Episode::new(&self.task, &self.world.map, scenario, obstacles, self.noise, seed)?;
        Ok(if ep.is_done() { None } else { Some(ep) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_objective: f64,
    pub mean_return: f64,
    /// Fraction of episodes with true objective 1.
    pub success_rate: f64,
}

/// Run one noise-free-policy episode per seed and average the scores.
pub fn evaluate_seeds<P: Policy + ?Sized>(policy: &mut P, setup: &TaskSetup, seeds: &[u64]) -> Result<EvalSummary> {
    if seeds.is_empty() {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let (mut obj, mut ret, mut wins) = (0.0, 0.0, 0usize);
    for &seed in seeds {
        let (scenario, obstacles) = sample_episode(&setup.world, &setup.task, &setup.scenarios, seed)?;
        let r = run_episode(&setup.task, &setup.world.map, scenario, obstacles, policy, setup.noise, seed)?;
        obj += r.true_objective;
        ret += r.cumulative_reward;
        wins += usize::from(r.success());
    }
    let n = seeds.len() as f64;
    Ok(EvalSummary { episodes: seeds.len(), mean_objective: obj / n, mean_return: ret / n, success_rate: wins as f64 / n })
}

/// `n_episodes` evaluation episodes with seeds derived from `seed`.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &mut P,
    setup: &TaskSetup,
    n_episodes: usize,
    seed: u64,
) -> Result<EvalSummary> {
    let seeds: Vec<u64> = (0..n_episodes as u64).map(|i| derive_seed(seed, i)).collect();
    evaluate_seeds(policy, setup, &seeds)
}

/// One row of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_true_objective: f64,
    pub mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub actor: Actor,
    pub critic: Critic,
    pub curve: Vec<CurvePoint>,
    pub updates: u64,
    pub episodes: usize,
}

impl TrainOutput {
    /// `step mean_true_objective mean_return` rows under a header.
    pub fn curve_text(&self) -> String {
        let mut s = String::from("step mean_true_objective mean_return\n");
        for p in &self.curve {
            let _ = writeln!(s, "{} {} {}", p.step, p.mean_true_objective, p.mean_return);
        }
        s
    }
}

fn uniform_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::new(rng.gen_range(V_MIN..=V_MAX), rng.gen_range(W_MIN..=W_MAX))
}

pub fn train(
    setup: &TaskSetup,
    actor_shape: &NetworkShape,
    critic_shape: &NetworkShape,
    cfg: &DdpgConfig,
    seed: u64,
) -> Result<TrainOutput> {
    train_with_progress(setup, actor_shape, critic_shape, cfg, seed, &mut |_| {})
}

/// Train from scratch, calling `progress` after each evaluation.
pub fn train_with_progress(
    setup: &TaskSetup,
    actor_shape: &NetworkShape,
    critic_shape: &NetworkShape,
    cfg: &DdpgConfig,
    seed: u64,
    progress: &mut dyn FnMut(&CurvePoint),
) -> Result<TrainOutput> {
    cfg.validate()?;
    if setup.task.weights.task() != setup.task.task {
        return Err(Error::Config("reward weights do not match the task".into()));
    }
    let obs_dim = setup.task.observation_width();
    let mut agent = DdpgAgent::new(obs_dim, actor_shape, critic_shape, cfg, &mut stream(seed, Stream::Init));
    let mut explore = stream(seed, Stream::Exploration);
    let mut replay_rng = stream(seed, Stream::Replay);
    let episode_root = derive_seed(seed, Stream::Trial as u64);
    let eval_seeds: Vec<u64> =
        (0..cfg.eval_episodes as u64).map(|i| derive_seed(derive_seed(seed, Stream::Evaluation as u64), i)).collect();

    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, obs_dim);
    let mut curve = Vec::new();
    let mut episodes = 0usize;
    let next_episode = |episodes: &mut usize| -> Result<Episode<'_>> {
        loop {
            let s = derive_seed(episode_root, *episodes as u64);
            *episodes += 1;
            if let Some(ep) = setup.episode(s)? {
                return Ok(ep);
            }
        }
    };

    if cfg.total_steps > 0 {
        let mut ep = next_episode(&mut episodes)?;
        let span = cfg.total_steps.saturating_sub(cfg.warmup_steps).max(1) as f64;
        for step in 1..=cfg.total_steps {
            let obs = ep.observation().to_vec();
            let action = if step <= cfg.warmup_steps {
                uniform_action(&mut explore)
            } else {
                let frac = ((step - cfg.warmup_steps) as f64 / span).min(1.0);
                let scale = 1.0 - (1.0 - cfg.noise_final_scale) * frac;
                let a = agent.actor.act(&obs)?;
                let nv: f64 = explore.sample(StandardNormal);
                let nw: f64 = explore.sample(StandardNormal);
                Action::new(a.v + scale * cfg.noise_std[0] * nv, a.w + scale * cfg.noise_std[1] * nw).clamped()
            };
            let out = ep.step(action)?;
            let next_observation = if out.done && out.terminal { obs.clone() } else { ep.observation().to_vec() };
            buffer.push(&Transition {
                observation: obs,
                action: [action.v, action.w],
                reward: out.reward,
                next_observation,
                terminal: out.terminal,
            })?;
            if out.done {
                ep = next_episode(&mut episodes)?;
            }

            if step > cfg.warmup_steps && step % cfg.update_every == 0 && buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut replay_rng)?;
                agent.update(&batch)?;
                if agent.updates().is_multiple_of(cfg.finite_check_every as u64) && !agent.all_finite() {
                    return Err(Error::NonFiniteLoss { update: agent.updates() });
                }
            }

            if cfg.eval_every > 0 && (step % cfg.eval_every == 0 || step == cfg.total_steps) {
                let summary = evaluate_seeds(&mut &agent.actor, setup, &eval_seeds)?;
                let point = CurvePoint {
                    step,
                    mean_true_objective: summary.mean_objective,
                    mean_return: summary.mean_return,
                };
                progress(&point);
                curve.push(point);
            }
        }
    }

    if !agent.all_finite() {
        return Err(Error::NonFiniteLoss { update: agent.updates() });
    }
    Ok(TrainOutput { updates: agent.updates(), actor: agent.actor, critic: agent.critic, curve, episodes })
}
