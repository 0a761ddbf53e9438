//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness (lidar noise, process noise, localization
//! noise, scenario sampling, ...) draws from its own stream so reordering one
//! consumer never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named stream identifiers mixed into the parent seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Lidar = 1,
    Process = 2,
    Localize = 3,
    Scenario = 4,
    Obstacles = 5,
    Exploration = 6,
    Replay = 7,
    Init = 8,
    Tuner = 9,
    Trial = 10,
    Evaluation = 11,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, which as u64))
}

pub fn rng_from(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
