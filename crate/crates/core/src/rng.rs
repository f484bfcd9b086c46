//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed derived from a master seed and a chain of tags, so
//! runs are reproducible and streams never alias across purposes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Tags separating the purposes a seed can be derived for.
pub mod tag {
    pub const ARRIVALS: u64 = 0xA1;
    pub const DECISIONS: u64 = 0xD3;
    pub const TRIAL: u64 = 0x7A;
    pub const PLAN: u64 = 0x91;
    pub const INSTANCE: u64 = 0x1E;
    pub const WEIGHTS: u64 = 0x3E;
    pub const GROUPS: u64 = 0x6B;
    pub const PARTITION: u64 = 0x5C;
    pub const DOWNSAMPLE: u64 = 0x4D;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and `tag`.
pub fn derive(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// Derives a child seed through a chain of tags.
pub fn derive_all(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(base, |s, &t| derive(s, t))
}

pub fn stream(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
