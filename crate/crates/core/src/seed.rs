//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness takes an explicit generator. Streams are
//! derived from a master seed by mixing in fixed tags with splitmix64, so a
//! session, its pad, its shuffles, and its fallback draws are all
//! independent and all reproduce from the one seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the splitmix64 output function. Good avalanche behavior
/// makes it a standard choice for spreading related seeds apart.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a stream tag.
pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(tag)))
}

/// Seeded generator for the stream identified by `tag` under `seed`.
pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, tag))
}

/// Stream tags. Distinct per purpose; sessions derive their own seed from
/// (master seed, session index) before applying these.
pub mod tag {
    pub const TRANSMIT: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const PAD: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const FALLBACK_A: u64 = 5;
    pub const FALLBACK_B: u64 = 6;
    pub const MATRIX: u64 = 7;
    pub const SESSION: u64 = 8;
    pub const SWEEP: u64 = 9;
}
