//! Navigation policy workbench: a noisy 2D lidar simulator with social-force
//! pedestrians, point-to-point and path-following tasks, a from-scratch DDPG
//! trainer, two-phase CMA-ES shaping of reward weights and network widths,
//! and a path-guided potential-field baseline.

pub mod apf;
pub mod ddpg;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod neural;
pub mod obstacles;
pub mod planning;
pub mod rng;
pub mod shaping;
pub mod tasks;
pub mod worldsim;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use tasks::{EpisodeResult, Outcome, Policy, RewardWeights, Scenario, TaskConfig, TaskKind};
pub use worldsim::{Action, Disc, LidarScan, NoiseParams, OccupancyMap, Pose, RobotState};
