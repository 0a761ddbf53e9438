//! Global guidance paths (PRM) and waypoint bookkeeping.

mod path;
mod prm;

pub use path::{
    interpolate_path, GuidancePath, DEFAULT_PARTIAL_WAYPOINTS, DEFAULT_REACH_RADIUS, DEFAULT_WAYPOINT_SPACING,
};
pub use prm::{build_prm, plan_path, segment_free, Roadmap};
