use rand::Rng;

use super::OccupancyMap;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rng::rng_from;

/// Layout family for [`generate_map`].
#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// Boundary walls only.
    Empty,
    /// A single horizontal corridor of the given free width through the
    /// middle; everything else is wall.
    Corridor { width_m: f64 },
    /// Walled room with a random number of axis-aligned boxes.
    Boxes { min_count: usize, max_count: usize, min_size_m: f64, max_size_m: f64 },
    /// Grid of rooms with one door per shared wall.
    Rooms { room_size_m: f64, door_width_m: f64 },
    /// Walled room with a U-shaped trap in the middle whose opening faces −x.
    UTrap { arm_length_m: f64, inner_width_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution: f64,
    pub kind: MapKind,
}

impl MapSpec {
    pub fn empty(width_m: f64, height_m: f64, resolution: f64) -> Self {
        Self { width_m, height_m, resolution, kind: MapKind::Empty }
    }
}

fn add_boundary(map: &mut OccupancyMap) {
    let (w, h) = (map.width(), map.height());
    for i in 0..w {
        map.set(i, 0, true);
        map.set(i, h - 1, true);
    }
    for j in 0..h {
        map.set(0, j, true);
        map.set(w - 1, j, true);
    }
}

/// Deterministic-in-seed procedural map.
pub fn generate_map(spec: &MapSpec, seed: u64) -> Result<OccupancyMap> {
    if !(spec.width_m > 0.0 && spec.height_m > 0.0 && spec.resolution > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "dimensions {}x{} at resolution {} must be positive",
            spec.width_m, spec.height_m, spec.resolution
        )));
    }
    let w = (spec.width_m / spec.resolution).round() as usize;
    let h = (spec.height_m / spec.resolution).round() as usize;
    if w < 3 || h < 3 {
        return Err(Error::InvalidSpec("map must span at least 3 cells per side".into()));
    }
    let res = spec.resolution;
    let mut map = OccupancyMap::new(w, h, res)?;
    let mut rng = rng_from(seed);
    match spec.kind {
        MapKind::Empty => {}
        MapKind::Corridor { width_m } => {
            let free = (width_m / res).round() as usize;
            if free == 0 || free + 2 > h {
                return Err(Error::InvalidSpec(format!("corridor width {width_m} does not fit")));
            }
            let lo = (h - free) / 2;
            for j in 0..h {
                if j < lo || j >= lo + free {
                    for i in 0..w {
                        map.set(i, j, true);
                    }
                }
            }
        }
        MapKind::Boxes { min_count, max_count, min_size_m, max_size_m } => {
            if min_count > max_count || !(min_size_m > 0.0 && min_size_m <= max_size_m) {
                return Err(Error::InvalidSpec("bad box parameters".into()));
            }
            let count = rng.gen_range(min_count..=max_count);
            for _ in 0..count {
                let bw = rng.gen_range(min_size_m..=max_size_m);
                let bh = rng.gen_range(min_size_m..=max_size_m);
                let x0 = rng.gen_range(0.0..(spec.width_m - bw).max(f64::MIN_POSITIVE));
                let y0 = rng.gen_range(0.0..(spec.height_m - bh).max(f64::MIN_POSITIVE));
                map.fill_rect(Vec2::new(x0, y0), Vec2::new(x0 + bw, y0 + bh), true);
            }
        }
        MapKind::Rooms { room_size_m, door_width_m } => {
            if !(room_size_m > 2.0 * res && door_width_m > 0.0 && door_width_m < room_size_m) {
                return Err(Error::InvalidSpec("bad room parameters".into()));
            }
            let pitch = (room_size_m / res).round() as usize;
            let door = (door_width_m / res).round().max(1.0) as usize;
            // Vertical walls at x = k·pitch with one door per room span.
            let mut k = pitch;
            while k + 1 < w {
                let mut start = 0;
                while start < h {
                    let end = (start + pitch).min(h);
                    for j in start..end {
                        map.set(k, j, true);
                    }
                    if end - start > door + 2 {
                        let d0 = rng.gen_range(start + 1..end - door);
                        for j in d0..d0 + door {
                            map.set(k, j, false);
                        }
                    }
                    start = end;
                }
                k += pitch;
            }
            let mut k = pitch;
            while k + 1 < h {
                let mut start = 0;
                while start < w {
                    let end = (start + pitch).min(w);
                    for i in start..end {
                        map.set(i, k, true);
                    }
                    if end - start > door + 2 {
                        let d0 = rng.gen_range(start + 1..end - door);
                        for i in d0..d0 + door {
                            map.set(i, k, false);
                        }
                    }
                    start = end;
                }
                k += pitch;
            }
        }
        MapKind::UTrap { arm_length_m, inner_width_m } => {
            let (cx, cy) = (spec.width_m / 2.0, spec.height_m / 2.0);
            let t = 2.0 * res;
            let half = inner_width_m / 2.0;
            // Closed end on +x, arms extending toward −x.
            map.fill_rect(Vec2::new(cx, cy - half - t), Vec2::new(cx + t, cy + half + t), true);
            map.fill_rect(Vec2::new(cx - arm_length_m, cy + half), Vec2::new(cx + t, cy + half + t), true);
            map.fill_rect(Vec2::new(cx - arm_length_m, cy - half - t), Vec2::new(cx + t, cy - half), true);
        }
    }
    add_boundary(&mut map);
    Ok(map)
}
