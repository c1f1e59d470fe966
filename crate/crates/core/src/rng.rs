//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by
//! `ChaCha8Rng::seed_from_u64(seed)`. Independent streams for parallel or
//! per-example use are derived by selecting the ChaCha stream number, so a
//! `(seed, stream)` pair always reproduces the same sequence regardless of
//! evaluation order or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
