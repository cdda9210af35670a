//! Per-trial random streams.
//!
//! A stream seed is a chain of SplitMix64 finalizations:
//! `s = mix(mix(mix(mix(seed) ^ scenario) ^ trial) ^ purpose)`, and the
//! stream itself is `ChaCha8Rng::seed_from_u64(s)`. Channel draws depend only
//! on `(seed, scenario, trial)`; measurement noise additionally on the
//! purpose tag, never on the scheme or budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Channel = 1,
    Noise = 2,
}

/// SplitMix64 output function applied to `x + golden gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(seed: u64, scenario: u64, trial: u64, purpose: StreamPurpose) -> u64 {
    splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ scenario) ^ trial) ^ purpose as u64)
}

pub fn trial_rng(seed: u64, scenario: u64, trial: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, scenario, trial, purpose))
}
