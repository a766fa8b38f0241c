//! Seed mixing for reproducible, independent chain streams.
//!
//! Every chain owns a `ChaCha8Rng` keyed by `mix64(seed)`; streams for
//! parallel runs are derived with [`stream_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective 64-bit mixer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` derived from `base`: `mix64(base ⊕ mix64(index))`.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Folds several identifiers into one seed, order-sensitively.
pub fn combine_seeds(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn chain_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed))
}
