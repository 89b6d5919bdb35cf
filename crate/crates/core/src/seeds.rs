//! Seed derivation tree.
//!
//! Every random quantity in a run is a pure function of the run seed and a
//! path of integers `(generation, stage, population tag, index, ...)`. Each
//! path component is folded in with a SplitMix64 finalizer, so sibling paths
//! give unrelated seeds and no generator state is threaded through the run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage identifiers used as the second path component.
pub mod stage {
    pub const MUTATE: u64 = 1;
    pub const PAIR: u64 = 2;
    pub const MATCH: u64 = 3;
    pub const HOLDOUT: u64 = 4;
    pub const TRAJECTORY: u64 = 5;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` along `path`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
