//! Seed derivation.
//!
//! Every random stream in the pipeline is keyed by a master seed plus a short
//! path of integers (subject index, visit, stream tag, ...). Keys are folded
//! with the SplitMix64 finalizer, so a derived seed depends only on the path
//! and never on how many draws other streams made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used across the crate.
pub mod stream {
    pub const SUBJECT: u64 = 1;
    pub const VISIT: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const DROPOUT: u64 = 6;
    pub const REFERENCES: u64 = 7;
    pub const PERTURB: u64 = 8;
    pub const SAMPLE: u64 = 9;
    pub const AGE: u64 = 10;
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of keys.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k)))
}

pub fn rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}
