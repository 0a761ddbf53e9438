//! Static world, lidar sensing, unicycle dynamics, noise and collisions.

mod collision;
mod dynamics;
mod lidar;
mod map;
mod mapgen;
mod state;

pub use collision::{check_collision, clearance, clearance_capped, disc_hits_map};
pub use dynamics::{localize, step_dynamics, CONTROL_DT};
pub use lidar::{
    add_lidar_noise, cast_ray, ray_disc_distance, raycast, raycast_with_discs, sense, LidarConfig, LidarScan,
    BEAM_COUNT, DEFAULT_FOV, DEFAULT_MAX_RANGE,
};
pub use map::OccupancyMap;
pub use mapgen::{generate_map, MapKind, MapSpec};
pub use state::{Action, Disc, NoiseParams, Pose, RobotState, ROBOT_RADIUS, V_MAX, V_MIN, W_MAX, W_MIN};
