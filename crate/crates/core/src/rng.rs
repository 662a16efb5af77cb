//! Seeded randomness.
//!
//! Every random decision in the crate (splits, shuffles, stratified draws,
//! initialisation) goes through [`seeded`], which is ChaCha8 keyed by
//! `SeedableRng::seed_from_u64`. Given the same 64-bit seed the stream is
//! identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for a named purpose from a base seed.
pub fn derived(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
