//! Social-force pedestrians that follow their own PRM guidance paths.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::planning::{interpolate_path, plan_path, GuidancePath, Roadmap};
use crate::rng::{rng_from, SimRng};
use crate::worldsim::{disc_hits_map, Disc, OccupancyMap};

#[derive(Debug, Clone, PartialEq)]
pub struct SfmParams {
    pub relaxation_time: f64,
    /// Exponential repulsion amplitude, m/s².
    pub repulsion_amplitude: f64,
    /// Exponential repulsion length scale, m.
    pub repulsion_range: f64,
    /// Walls farther than this from the obstacle center exert no force.
    pub wall_cutoff: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub radius: f64,
    /// Speed cap as a multiple of the desired speed.
    pub speed_cap_factor: f64,
    pub waypoint_spacing: f64,
    pub reach_radius: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        Self {
            relaxation_time: 0.5,
            repulsion_amplitude: 2.0,
            repulsion_range: 0.3,
            wall_cutoff: 1.5,
            speed_min: 0.5,
            speed_max: 1.2,
            radius: 0.3,
            speed_cap_factor: 1.3,
            waypoint_spacing: 1.0,
            reach_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingObstacle {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub desired_speed: f64,
    pub path: GuidancePath,
    pub relaxation_time: f64,
}

impl MovingObstacle {
    pub fn disc(&self) -> Disc {
        Disc { center: self.position, radius: self.radius }
    }

    /// Unit direction to the first unreached waypoint scaled by the desired
    /// speed; zero once the path is complete.
    pub fn desired_velocity(&self) -> Vec2 {
        match self.path.first_unreached() {
            Some(i) => {
                let d = self.path.waypoints()[i] - self.position;
                let n = d.norm();
                if n > 1e-9 {
                    d * (self.desired_speed / n)
                } else {
                    Vec2::zeros()
                }
            }
            None => Vec2::zeros(),
        }
    }
}

fn repulsion(params: &SfmParams, from: Vec2, on: Vec2, gap: f64) -> Vec2 {
    let d = on - from;
    let n = d.norm();
    if n < 1e-12 {
        return Vec2::zeros();
    }
    d / n * (params.repulsion_amplitude * (-gap / params.repulsion_range).exp())
}

/// Total social force (acceleration) acting on `obstacle`.
pub fn sfm_force(
    obstacle: &MovingObstacle,
    neighbors: &[MovingObstacle],
    robot: Option<&Disc>,
    map: &OccupancyMap,
    params: &SfmParams,
) -> Vec2 {
    let p = obstacle.position;
    let mut f = (obstacle.desired_velocity() - obstacle.velocity) / obstacle.relaxation_time;
    for other in neighbors {
        let gap = (other.position - p).norm() - other.radius - obstacle.radius;
        f += repulsion(params, other.position, p, gap);
    }
    if let Some(r) = robot {
        let gap = (r.center - p).norm() - r.radius - obstacle.radius;
        f += repulsion(params, r.center, p, gap);
    }
    if let Some((d, q)) = map.nearest_occupied(p, params.wall_cutoff) {
        f += repulsion(params, q, p, d - obstacle.radius);
    }
    f
}

/// Push a disc out of walls along the nearest-wall normal. Returns the
/// adjusted position, or `None` when the disc cannot be freed.
fn project_free(map: &OccupancyMap, mut p: Vec2, radius: f64) -> Option<Vec2> {
    let (w, h) = map.extent();
    for _ in 0..8 {
        p.x = p.x.clamp(radius + 1e-9, w - radius - 1e-9);
        p.y = p.y.clamp(radius + 1e-9, h - radius - 1e-9);
        if !disc_hits_map(map, p, radius) {
            return Some(p);
        }
        let (d, q) = map.nearest_occupied(p, radius)?;
        if d < 1e-9 {
            return None;
        }
        p = q + (p - q) * ((radius + 1e-6) / d);
    }
    (!disc_hits_map(map, p, radius)).then_some(p)
}

fn cap_speed(v: Vec2, cap: f64) -> Vec2 {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

/// One Euler step of the social force model for a single obstacle.
pub fn sfm_step(
    obstacle: &MovingObstacle,
    neighbors: &[MovingObstacle],
    robot: Option<&Disc>,
    map: &OccupancyMap,
    dt: f64,
    params: &SfmParams,
) -> MovingObstacle {
    debug_assert!(dt > 0.0);
    let force = sfm_force(obstacle, neighbors, robot, map, params);
    let cap = params.speed_cap_factor * obstacle.desired_speed;
    let mut next = obstacle.clone();
    next.velocity = cap_speed(obstacle.velocity + force * dt, cap);
    let target = obstacle.position + next.velocity * dt;
    settle(&mut next, obstacle.position, target, map);
    next.path.update_reached(next.position);
    next
}

/// Move `ob` to `target` subject to wall containment; on failure stay at `prev`.
fn settle(ob: &mut MovingObstacle, prev: Vec2, target: Vec2, map: &OccupancyMap) {
    match project_free(map, target, ob.radius) {
        Some(p) => {
            if p != target {
                // Drop the velocity component that pointed into the wall.
                let push = p - target;
                let n = push.norm();
                if n > 0.0 {
                    let normal = push / n;
                    let into = ob.velocity.dot(&normal);
                    if into < 0.0 {
                        ob.velocity -= normal * into;
                    }
                }
            }
            ob.position = p;
        }
        None => {
            ob.position = prev;
            ob.velocity = Vec2::zeros();
        }
    }
}

fn random_free_point(map: &OccupancyMap, radius: f64, rng: &mut SimRng) -> Option<Vec2> {
    let (w, h) = map.extent();
    (0..500)
        .map(|_| Vec2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h)))
        .find(|p| !disc_hits_map(map, *p, radius))
}

fn random_guidance(
    map: &OccupancyMap,
    roadmap: &Roadmap,
    from: Vec2,
    params: &SfmParams,
    rng: &mut SimRng,
) -> Option<GuidancePath> {
    for _ in 0..10 {
        let goal = random_free_point(map, params.radius, rng)?;
        if let Ok(raw) = plan_path(roadmap, map, from, goal) {
            if raw.len() > 1 {
                return Some(interpolate_path(&raw, params.waypoint_spacing, params.reach_radius));
            }
        }
    }
    None
}

/// Place `count` obstacles at collision-free, pairwise non-overlapping
/// positions, each with a PRM guidance path to a random goal.
pub fn spawn_obstacles(
    map: &OccupancyMap,
    roadmap: &Roadmap,
    count: usize,
    exclusions: &[Disc],
    params: &SfmParams,
    seed: u64,
) -> Result<Vec<MovingObstacle>> {
    let mut rng = rng_from(seed);
    let mut placed: Vec<MovingObstacle> = Vec::with_capacity(count);
    let max_attempts = 50 * count.max(1);
    let mut attempts = 0;
    let (w, h) = map.extent();
    while placed.len() < count {
        if attempts >= max_attempts {
            return Err(Error::SpawnFailure { requested: count, placed: placed.len(), attempts });
        }
        attempts += 1;
        let p = Vec2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h));
        let r = params.radius;
        if disc_hits_map(map, p, r + 0.05) {
            continue;
        }
        let clear = |d: &Disc| (d.center - p).norm() >= d.radius + r + 0.05;
        if !exclusions.iter().all(clear) || !placed.iter().all(|o| clear(&o.disc())) {
            continue;
        }
        let Some(mut path) = random_guidance(map, roadmap, p, params, &mut rng) else {
            continue;
        };
        path.update_reached(p);
        placed.push(MovingObstacle {
            position: p,
            velocity: Vec2::zeros(),
            radius: r,
            desired_speed: rng.gen_range(params.speed_min..=params.speed_max),
            path,
            relaxation_time: params.relaxation_time,
        });
    }
    Ok(placed)
}

/// All moving obstacles of one episode, updated synchronously.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    pub obstacles: Vec<MovingObstacle>,
    pub params: SfmParams,
    roadmap: Arc<Roadmap>,
    rng: SimRng,
}

impl ObstacleField {
    pub fn new(obstacles: Vec<MovingObstacle>, params: SfmParams, roadmap: Arc<Roadmap>, seed: u64) -> Self {
        Self { obstacles, params, roadmap, rng: rng_from(seed) }
    }

    pub fn spawn(
        map: &OccupancyMap,
        roadmap: Arc<Roadmap>,
        count: usize,
        exclusions: &[Disc],
        params: SfmParams,
        seed: u64,
    ) -> Result<Self> {
        let obstacles = spawn_obstacles(map, &roadmap, count, exclusions, &params, seed)?;
        Ok(Self::new(obstacles, params, roadmap, crate::rng::derive_seed(seed, 1)))
    }

    pub fn discs(&self) -> Vec<Disc> {
        self.obstacles.iter().map(MovingObstacle::disc).collect()
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Jacobi update of every obstacle from the previous tick's states,
    /// followed by overlap projection and re-goaling of finished paths.
    pub fn step(&mut self, map: &OccupancyMap, robot: Option<&Disc>, dt: f64) {
        let prev = &self.obstacles;
        let mut next: Vec<MovingObstacle> = (0..prev.len())
            .map(|i| {
                let neighbors: Vec<MovingObstacle> = prev
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && (o.position - prev[i].position).norm() < 3.0)
                    .map(|(_, o)| o.clone())
                    .collect();
                sfm_step(&prev[i], &neighbors, robot, map, dt, &self.params)
            })
            .collect();

        // Separate overlapping pairs; a move that would enter a wall is dropped.
        for _ in 0..3 {
            let mut moved = false;
            for i in 0..next.len() {
                for j in (i + 1)..next.len() {
                    let d = next[j].position - next[i].position;
                    let dist = d.norm();
                    let min = next[i].radius + next[j].radius;
                    if dist >= min || dist < 1e-12 {
                        continue;
                    }
                    let push = d / dist * ((min - dist) / 2.0 + 1e-6);
                    for (k, sign) in [(i, -1.0), (j, 1.0)] {
                        let target = next[k].position + push * sign;
                        if !disc_hits_map(map, target, next[k].radius) {
                            next[k].position = target;
                            moved = true;
                        }
                    }
                }
            }
            if !moved {
                break;
            }
        }

        for (ob, old) in next.iter_mut().zip(prev) {
            if disc_hits_map(map, ob.position, ob.radius) {
                ob.position = old.position;
                ob.velocity = Vec2::zeros();
            }
            if ob.path.all_reached() {
                if let Some(mut path) = random_guidance(map, &self.roadmap, ob.position, &self.params, &mut self.rng) {
                    path.update_reached(ob.position);
                    ob.path = path;
                }
            }
        }
        self.obstacles = next;
    }
}
