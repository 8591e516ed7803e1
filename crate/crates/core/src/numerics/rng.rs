//! Reproducible random streams.
//!
//! Every sample index gets its own ChaCha20 stream derived from the user seed,
//! so output does not depend on the number of worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard exponential draw.
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}
