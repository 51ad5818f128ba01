//! Seeded randomness for block activation.
//!
//! Activation draws use ChaCha8 (a counter-based generator) on stream ids
//! reserved for activation, so they never share state with data generation
//! or anything derived from the iterates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BLOCK_STREAM: u64 = 1;
const LOSS_STREAM: u64 = 2;

pub fn block_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, BLOCK_STREAM)
}

pub fn loss_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, LOSS_STREAM)
}

pub fn data_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws `k` distinct indices of `0..pool.len()` uniformly by a partial
/// Fisher–Yates shuffle of `pool`; the sample is `pool[..k]`.
///
/// `pool` must hold a permutation of `0..m`; it is left permuted, which keeps
/// later draws uniform.
pub fn sample_without_replacement<R: Rng>(rng: &mut R, pool: &mut [usize], k: usize) {
    let m = pool.len();
    for i in 0..k.min(m) {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
}

/// Number of blocks drawn per iteration, `⌊mα⌋`.
///
/// A relative slack of 1e-9 keeps products like `100 × 0.29` from rounding
/// down a whole block.
pub fn blocks_per_iteration(m: usize, alpha: f64) -> usize {
    let raw = m as f64 * alpha;
    ((raw * (1.0 + 1e-9)).floor() as usize).min(m)
}
