use super::{Disc, OccupancyMap, RobotState};
use crate::geometry::Vec2;

/// Does a disc overlap any occupied cell or stick out of the map?
pub fn disc_hits_map(map: &OccupancyMap, center: Vec2, radius: f64) -> bool {
    let (w, h) = map.extent();
    if center.x - radius < 0.0 || center.y - radius < 0.0 || center.x + radius > w || center.y + radius > h {
        return true;
    }
    let res = map.resolution();
    let i0 = ((center.x - radius) / res).floor() as i64;
    let i1 = ((center.x + radius) / res).floor() as i64;
    let j0 = ((center.y - radius) / res).floor() as i64;
    let j1 = ((center.y + radius) / res).floor() as i64;
    let r2 = radius * radius;
    for j in j0..=j1 {
        for i in i0..=i1 {
            if map.occupied_signed(i, j) && (map.closest_point_in_cell(i, j, center) - center).norm_squared() < r2 {
                return true;
            }
        }
    }
    false
}

/// True iff the robot disc overlaps an occupied cell, leaves the map, or
/// overlaps an obstacle disc.
pub fn check_collision(map: &OccupancyMap, state: &RobotState, discs: &[Disc]) -> bool {
    let p = state.position();
    disc_hits_map(map, p, state.radius)
        || discs.iter().any(|d| (d.center - p).norm() < d.radius + state.radius)
}

/// Distance from the robot surface to the nearest occupied cell or obstacle
/// disc surface, floored at zero. Obstacles farther than `cap` beyond the
/// surface are ignored and `cap` is returned.
pub fn clearance_capped(map: &OccupancyMap, state: &RobotState, discs: &[Disc], cap: f64) -> f64 {
    let p = state.position();
    let search = cap + state.radius;
    let mut best = map.nearest_occupied(p, search).map_or(search, |(d, _)| d);
    for d in discs {
        best = best.min((d.center - p).norm() - d.radius);
    }
    (best - state.radius).clamp(0.0, cap)
}

/// Unbounded clearance; `f64::INFINITY` when the world holds no obstacles.
pub fn clearance(map: &OccupancyMap, state: &RobotState, discs: &[Disc]) -> f64 {
    if discs.is_empty() && !map.cells().iter().any(|c| *c) {
        return f64::INFINITY;
    }
    let (w, h) = map.extent();
    let reach = w.hypot(h) + discs.iter().map(|d| (d.center - state.position()).norm()).fold(0.0, f64::max);
    clearance_capped(map, state, discs, reach)
}
