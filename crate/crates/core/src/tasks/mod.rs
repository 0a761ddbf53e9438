//! Point-to-point and path-following tasks: rewards, true objectives,
//! observations and the episode loop.

mod episode;
mod observation;
mod reward;
mod trajectory;

pub use episode::{
    run_episode, sample_episode, sample_p2p, sample_pf, ConstantPolicy, Episode, EpisodeResult, Outcome, Policy,
    Scenario, ScenarioSpec, StepOutcome, StepView, TaskConfig, World, DEFAULT_CLEARANCE_THRESHOLD,
    DEFAULT_GOAL_RADIUS, DEFAULT_MAX_STEPS, DEFAULT_PRM_CONNECT_RADIUS, DEFAULT_PRM_SAMPLES,
};
pub use observation::{
    build_frame, goal_obs_width, observation_width, p2p_goal_obs, pf_goal_obs, FrameStack, DEFAULT_FRAMES,
};
pub use reward::{
    p2p_reward, p2p_true_objective, pf_reward, pf_true_objective, P2pTerms, PfTerms, RewardWeights, TaskKind,
};
pub use trajectory::{
    dump_trajectory, load_trajectory, parse_trajectory, save_trajectory, Trajectory, TrajectoryRow, TRAJECTORY_HEADER,
};
