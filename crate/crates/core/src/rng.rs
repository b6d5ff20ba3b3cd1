//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`], which produces
//! the same stream on every platform. Independent sub-streams (one per
//! benchmark replication, say) are derived by selecting the ChaCha stream id,
//! so replication `i` can be reproduced without replaying `0..i`.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the generator keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on `[-1, 1)` from a 53-bit mantissa draw.
pub fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}
