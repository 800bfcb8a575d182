//! Seed splitting for reproducible parallel streams.
//!
//! Every replication `r` of a Monte Carlo loop draws from its own generator
//! seeded with [`stream_seed`]`(base, r)`, so results do not depend on the
//! order in which replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to `base + (index + 1)·φ64`.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `index` under `base`.
pub fn stream(base: u64, index: u64) -> StreamRng {
    seeded(stream_seed(base, index))
}
