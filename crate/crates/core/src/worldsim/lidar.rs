use rand::Rng;
use rand_distr::StandardNormal;

use super::{Disc, OccupancyMap, RobotState};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const BEAM_COUNT: usize = 64;
pub const DEFAULT_FOV: f64 = 220.0 * std::f64::consts::PI / 180.0;
pub const DEFAULT_MAX_RANGE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self { fov: DEFAULT_FOV, max_range: DEFAULT_MAX_RANGE }
    }
}

impl LidarConfig {
    /// Beam `k`'s direction relative to the robot heading.
    pub fn beam_offset(&self, k: usize) -> f64 {
        -self.fov / 2.0 + k as f64 * self.fov / (BEAM_COUNT - 1) as f64
    }
}

/// One 64-beam scan. Beam `k` points at `heading − fov/2 + k·fov/63`.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub ranges: [f64; BEAM_COUNT],
    pub fov: f64,
    pub max_range: f64,
}

impl LidarScan {
    pub fn beam_offset(&self, k: usize) -> f64 {
        LidarConfig { fov: self.fov, max_range: self.max_range }.beam_offset(k)
    }

    /// Ranges divided by `max_range`, in [0, 1].
    pub fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        self.ranges.iter().map(move |r| r / self.max_range)
    }
}

pub(crate) fn validate_pose(map: &OccupancyMap, state: &RobotState) -> Result<()> {
    let p = state.position();
    match map.cell_of(p) {
        None => Err(Error::InvalidPose { x: p.x, y: p.y, reason: "outside map bounds" }),
        Some((i, j)) if map.occupied(i, j) => {
            Err(Error::InvalidPose { x: p.x, y: p.y, reason: "center in occupied cell" })
        }
        Some(_) => Ok(()),
    }
}

/// Distance along the ray to the first occupied cell boundary, by grid
/// traversal. Returns `max_range` when nothing is hit or the ray leaves the
/// map. On exact corner ties the x step is taken first.
pub fn cast_ray(map: &OccupancyMap, origin: Vec2, angle: f64, max_range: f64) -> f64 {
    let res = map.resolution();
    let (dy, dx) = angle.sin_cos();
    let (mut i, mut j) = map.cell_index(origin);
    if !map.in_bounds(i, j) {
        return max_range;
    }
    if map.occupied(i as usize, j as usize) {
        return 0.0;
    }
    let axis = |d: f64, p: f64, cell: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((cell + 1) as f64 * res - p) / d, res / d)
        } else if d < 0.0 {
            (-1, (cell as f64 * res - p) / d, -res / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut t_max_x, t_delta_x) = axis(dx, origin.x, i);
    let (step_y, mut t_max_y, t_delta_y) = axis(dy, origin.y, j);
    loop {
        let t = if t_max_x <= t_max_y {
            i += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            j += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t >= max_range || !map.in_bounds(i, j) {
            return max_range;
        }
        if map.occupied(i as usize, j as usize) {
            return t.max(0.0);
        }
    }
}

/// Smallest non-negative ray parameter hitting the disc, if any.
pub fn ray_disc_distance(origin: Vec2, angle: f64, disc: &Disc) -> Option<f64> {
    let (s, c) = angle.sin_cos();
    let d = Vec2::new(c, s);
    let oc = origin - disc.center;
    let b = oc.dot(&d);
    let cc = oc.norm_squared() - disc.radius * disc.radius;
    if cc <= 0.0 {
        return Some(0.0);
    }
    let disc_ = b * b - cc;
    if disc_ < 0.0 {
        return None;
    }
    let t = -b - disc_.sqrt();
    (t >= 0.0).then_some(t)
}

/// Noise-free scan against the static map plus any moving-obstacle discs.
pub fn raycast_with_discs(
    map: &OccupancyMap,
    state: &RobotState,
    discs: &[Disc],
    lidar: &LidarConfig,
) -> Result<LidarScan> {
    validate_pose(map, state)?;
    let origin = state.position();
    let mut ranges = [lidar.max_range; BEAM_COUNT];
    for (k, r) in ranges.iter_mut().enumerate() {
        let angle = state.heading + lidar.beam_offset(k);
        let mut range = cast_ray(map, origin, angle, lidar.max_range);
        for disc in discs {
            if let Some(t) = ray_disc_distance(origin, angle, disc) {
                range = range.min(t);
            }
        }
        *r = range.clamp(0.0, lidar.max_range);
    }
    Ok(LidarScan { ranges, fov: lidar.fov, max_range: lidar.max_range })
}

/// Noise-free scan against the static map.
pub fn raycast(map: &OccupancyMap, state: &RobotState, max_range: f64) -> Result<LidarScan> {
    raycast_with_discs(map, state, &[], &LidarConfig { max_range, ..LidarConfig::default() })
}

/// Add per-beam Gaussian noise with std `sigma`, clamped to `[0, max_range]`.
pub fn add_lidar_noise<R: Rng + ?Sized>(scan: &mut LidarScan, sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    for r in scan.ranges.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *r = (*r + sigma * z).clamp(0.0, scan.max_range);
    }
}

/// Raycast followed by lidar noise.
pub fn sense<R: Rng + ?Sized>(
    map: &OccupancyMap,
    state: &RobotState,
    discs: &[Disc],
    lidar: &LidarConfig,
    sigma_lidar: f64,
    rng: &mut R,
) -> Result<LidarScan> {
    let mut scan = raycast_with_discs(map, state, discs, lidar)?;
    add_lidar_noise(&mut scan, sigma_lidar, rng);
    Ok(scan)
}
