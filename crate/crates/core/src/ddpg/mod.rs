//! DDPG with a uniform replay buffer, target networks and Polyak averaging.

mod agent;
mod replay;
mod train;

pub use agent::{DdpgAgent, UpdateStats};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{
    evaluate_policy, evaluate_seeds, train, train_with_progress, CurvePoint, EvalSummary, TaskSetup, TrainOutput,
};

use crate::error::{Error, Result};

/// Trainer hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Polyak rate for the target networks.
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Exploration std for `(v, w)` at the end of warmup.
    pub noise_std: [f64; 2],
    /// Exploration std at the last step as a fraction of `noise_std`.
    pub noise_final_scale: f64,
    /// Steps of uniformly random actions before learning starts.
    pub warmup_steps: usize,
    pub total_steps: usize,
    /// Environment steps per gradient update.
    pub update_every: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Parameter finiteness is checked every this many updates.
    pub finite_check_every: usize,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            tau: 0.005,
            batch_size: 256,
            buffer_capacity: 500_000,
            noise_std: [0.1, 0.2],
            noise_final_scale: 0.1,
            warmup_steps: 5_000,
            total_steps: 300_000,
            update_every: 1,
            eval_every: 10_000,
            eval_episodes: 20,
            finite_check_every: 1_000,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("batch size must be in 1..=buffer capacity");
        }
        if self.noise_std.iter().any(|s| !(*s >= 0.0)) || !(0.0..=1.0).contains(&self.noise_final_scale) {
            return bad("exploration noise must be non-negative with a final scale in [0, 1]");
        }
        if self.update_every == 0 || self.eval_episodes == 0 || self.finite_check_every == 0 {
            return bad("update_every, eval_episodes and finite_check_every must be positive");
        }
        Ok(())
    }
}
