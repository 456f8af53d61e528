//! Seed splitting.
//!
//! Every randomized routine takes one top-level `u64` seed. Independent
//! sub-tasks draw from `stream(seed, tag, index)`: a ChaCha8 generator keyed by
//! the seed with its 64-bit stream id set to `tag << 32 | index`. Tags are fixed
//! per routine (see the `tag` constants), so a run is reproducible regardless of
//! how tasks are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod tag {
    pub const SEGMENT: u64 = 1;
    pub const ISOMETRY: u64 = 2;
    pub const MEAN: u64 = 3;
    pub const ORBIT: u64 = 4;
    pub const MODULI: u64 = 5;
    pub const LINEAR_MAP: u64 = 6;
    pub const TABLE: u64 = 7;
    pub const PAIRS: u64 = 8;
    pub const CONFIG: u64 = 9;
    pub const PROBE: u64 = 10;
    pub const SUBSEED: u64 = 11;
}

/// A seed for the `index`-th of a family of independent runs.
pub fn subseed(seed: u64, index: u32) -> u64 {
    stream(seed, tag::SUBSEED, index).next_u64()
}

pub fn stream(seed: u64, tag: u64, index: u32) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 32) | u64::from(index));
    rng
}
