//! Two-phase hyperparameter shaping: CMA-ES over reward weights scored by
//! true objective, then over network widths scored by cumulative reward.

mod cmaes;
mod db;
mod run;

pub use cmaes::{default_population, Cmaes};
pub use db::{Phase, TrialDb, TrialRecord, TrialStatus};
pub use run::{
    run_full_shaping, shape_networks, shape_rewards, DdpgRunner, PhaseConfig, ShapingConfig, ShapingReport,
    SurrogateRunner, TrialRunner, TrialSpec, NETWORK_DIMS,
};

#[cfg(test)]
mod tests;
