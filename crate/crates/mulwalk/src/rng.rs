//! Deterministic substreams: SplitMix64 mixing of `(seed, index)` feeding
//! per-stream ChaCha generators.
//!
//! Every randomized operation in this crate derives one substream per logical
//! work item (path, trial, restart, chunk), so output is a pure function of
//! the caller's seed and never depends on how work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `index`-th output of the SplitMix64 sequence started at `seed`.
#[inline]
pub fn subseed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Generator for substream `index` of base `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(subseed(seed, index))
}
