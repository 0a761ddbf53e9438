//! Shared fixtures for the criterion benchmarks.

use rand::Rng;
use shapenav::ddpg::{Batch, ReplayBuffer, Transition};
use shapenav::rng::rng_from;
use shapenav::tasks::{observation_width, TaskKind, DEFAULT_FRAMES};
use shapenav::worldsim::{generate_map, MapKind, MapSpec, OccupancyMap};

/// Observation width of the default point-to-point task.
pub fn p2p_obs_dim() -> usize {
    observation_width(TaskKind::P2p, DEFAULT_FRAMES, 0)
}

/// Cluttered 20 m room used by the sensing benchmarks.
pub fn cluttered_map() -> OccupancyMap {
    let spec = MapSpec {
        kind: MapKind::Boxes { min_count: 8, max_count: 8, min_size_m: 0.5, max_size_m: 2.0 },
        ..MapSpec::empty(20.0, 20.0, 0.05)
    };
    generate_map(&spec, 11).expect("bench map")
}

/// Replay buffer filled with random transitions.
pub fn random_buffer(obs_dim: usize, len: usize, seed: u64) -> ReplayBuffer {
    let mut rng = rng_from(seed);
    let mut buf = ReplayBuffer::new(len, obs_dim);
    for _ in 0..len {
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(0.0..5.0)).collect();
        let next: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(0.0..5.0)).collect();
        let t = Transition {
            observation: obs,
            action: [rng.gen_range(-0.2..1.0), rng.gen_range(-1.0..1.0)],
            reward: rng.gen_range(-1.0..1.0),
            next_observation: next,
            terminal: rng.gen_bool(0.05),
        };
        buf.push(&t).expect("matching width");
    }
    buf
}

pub fn random_batch(obs_dim: usize, size: usize, seed: u64) -> Batch {
    random_buffer(obs_dim, size, seed).sample(size, &mut rng_from(seed + 1)).expect("full buffer")
}
