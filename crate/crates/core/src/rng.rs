//! The single random source behind every initialization.
//!
//! All randomness is drawn from ChaCha8 seeded through `seed_from_u64`, which
//! is portable across platforms and pointer widths.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[-bound, bound)`.
#[inline]
pub fn symmetric<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        rng.gen_range(-bound..bound)
    }
}
