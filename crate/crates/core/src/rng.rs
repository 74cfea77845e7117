//! Counter-addressed random streams.
//!
//! Every random quantity is a function of `(seed, stream, position)`. Trials
//! of a Monte Carlo run live on separate ChaCha streams, and within a stream
//! the `j`-th draw sits at a fixed word offset, so chunking or thread count
//! never changes the numbers that come out.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream reserved for sampled matrix products.
pub const PRODUCT_STREAM: u64 = u64::MAX;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Positions `rng` so the next `next_u64` is the `index`-th 64-bit draw of its stream.
pub fn seek_u64(rng: &mut ChaCha8Rng, index: u64) {
    rng.set_word_pos(2 * index as u128);
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
