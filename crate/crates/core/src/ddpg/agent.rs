use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::replay::Batch;
use super::DdpgConfig;
use crate::error::{Error, Result};
use crate::neural::{grad_tensors, soft_update, Adam, Actor, Critic, NetworkShape};

/// Losses reported by one gradient update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Mean Q(o, π(o)) over the batch before the actor step.
    pub actor_q: f64,
}

/// Online and target networks with their optimizers.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Actor,
    pub critic: Critic,
    pub actor_target: Actor,
    pub critic_target: Critic,
    actor_opt: Adam,
    critic_opt: Adam,
    gamma: f64,
    tau: f64,
    updates: u64,
}

fn sizes(t: Vec<&[f64]>) -> Vec<usize> {
    t.iter().map(|x| x.len()).collect()
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        actor_shape: &NetworkShape,
        critic_shape: &NetworkShape,
        cfg: &DdpgConfig,
        rng: &mut R,
    ) -> Self {
        let actor = Actor::new(obs_dim, actor_shape, rng);
        let critic = Critic::new(obs_dim, critic_shape, rng);
        Self::from_networks(actor, critic, cfg)
    }

    pub fn from_networks(actor: Actor, critic: Critic, cfg: &DdpgConfig) -> Self {
        Self {
            actor_opt: Adam::new(cfg.actor_lr, &sizes(actor.tensors())),
            critic_opt: Adam::new(cfg.critic_lr, &sizes(critic.tensors())),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            gamma: cfg.gamma,
            tau: cfg.tau,
            updates: 0,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Bootstrapped regression targets `r + γ(1 − done)·Q'(o', π'(o'))`.
    pub fn critic_targets(&self, batch: &Batch) -> Array1<f64> {
        let next_a = self.actor_target.forward_batch(batch.next_observations.view());
        let next_q = self.critic_target.forward_batch(batch.next_observations.view(), next_a.view());
        let next_q = next_q.index_axis(Axis(1), 0).to_owned();
        &batch.rewards + &(next_q * (1.0 - &batch.terminals) * self.gamma)
    }

    /// Mean squared TD error against the current targets.
    pub fn critic_loss(&self, batch: &Batch) -> f64 {
        let y = self.critic_targets(batch);
        let q = self.critic.forward_batch(batch.observations.view(), batch.actions.view());
        let diff = &q.index_axis(Axis(1), 0) - &y;
        diff.mapv(|d| d * d).mean().unwrap_or(0.0)
    }

    /// One critic step, one actor step, then Polyak target updates.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let n = batch.len() as f64;
        let y = self.critic_targets(batch);

        let (q, cache) = self.critic.forward_cached(batch.observations.clone(), batch.actions.view());
        let diff = &q.index_axis(Axis(1), 0) - &y;
        let critic_loss = diff.mapv(|d| d * d).mean().unwrap_or(0.0);
        if !critic_loss.is_finite() {
            return Err(Error::NonFiniteLoss { update: self.updates });
        }
        let upstream = diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1));
        let grads = self.critic.param_gradients(&cache, upstream);
        self.critic_opt.apply(self.critic.tensors_mut(), grad_tensors(&grads));

        let (a, a_cache) = self.actor.forward_cached(batch.observations.clone());
        let (q_pi, c_cache) = self.critic.forward_cached(batch.observations.clone(), a.view());
        let actor_q = q_pi.mean().unwrap_or(0.0);
        if !actor_q.is_finite() {
            return Err(Error::NonFiniteLoss { update: self.updates });
        }
        // Ascend Q: the loss is −mean Q.
        let d_action = self.critic.action_gradient(&c_cache, Array2::from_elem((batch.len(), 1), -1.0 / n));
        let actor_grads = self.actor.param_gradients(&a_cache, d_action);
        self.actor_opt.apply(self.actor.tensors_mut(), grad_tensors(&actor_grads));

        soft_update(self.actor_target.tensors_mut(), self.actor.tensors(), self.tau);
        soft_update(self.critic_target.tensors_mut(), self.critic.tensors(), self.tau);
        self.updates += 1;
        Ok(UpdateStats { critic_loss, actor_q })
    }

    /// Critic-only update, used when the actor must stay fixed.
    pub fn update_critic(&mut self, batch: &Batch) -> Result<f64> {
        let n = batch.len() as f64;
        let y = self.critic_targets(batch);
        let (q, cache) = self.critic.forward_cached(batch.observations.clone(), batch.actions.view());
        let diff = &q.index_axis(Axis(1), 0) - &y;
        let loss = diff.mapv(|d| d * d).mean().unwrap_or(0.0);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { update: self.updates });
        }
        let grads = self.critic.param_gradients(&cache, diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1)));
        self.critic_opt.apply(self.critic.tensors_mut(), grad_tensors(&grads));
        soft_update(self.critic_target.tensors_mut(), self.critic.tensors(), self.tau);
        self.updates += 1;
        Ok(loss)
    }

    pub fn all_finite(&self) -> bool {
        self.critic.all_finite() && self.actor.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}
