//! Sub-seed derivation.
//!
//! A run is driven by a single user seed. Each randomized stage draws from its
//! own stream, seeded with `seed + offset` where the offset is fixed per stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SYNTH: u64 = 0;
pub const DDI_DEDUP: u64 = 1;
pub const PARTITION: u64 = 2;
pub const TRAIN: u64 = 3;
pub const RANDOM_BASELINE: u64 = 4;
pub const KNN: u64 = 5;

pub fn derive(seed: u64, offset: u64) -> u64 {
    seed.wrapping_add(offset)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
