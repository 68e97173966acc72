//! Per-item seed derivation.
//!
//! Every randomized per-item step draws from its own generator seeded by
//! `derive(base, stream, index)`, so results do not depend on the order
//! or thread in which items are processed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for item `index` of stream `stream` under base seed `base`.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream identifiers, one per randomized pipeline stage.
pub mod stream {
    pub const GOOD: u64 = 1;
    pub const HUMAN: u64 = 2;
    pub const SYNTHETIC: u64 = 3;
    pub const DEV_SPLIT: u64 = 4;
    pub const SYNTHETIC_TEST: u64 = 5;
    pub const CONTINUATION: u64 = 6;
    pub const BREAKER: u64 = 7;
}
