//! Reproducible random key streams for experiments.
//!
//! Inserted ("positive") keys are even and query ("negative") keys are odd,
//! so the two sets are disjoint without any membership bookkeeping.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keys per independently seeded chunk of a negative stream.
pub const CHUNK_KEYS: u64 = 1 << 20;

/// `n` random even 64-bit keys.
pub fn positive_keys(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64() & !1).collect()
}

/// `n` random odd 64-bit keys.
pub fn negative_keys(seed: u64, n: usize) -> Vec<u64> {
    NegativeKeys::new(seed).take(n as u64).collect()
}

/// An endless stream of odd keys, split into chunks of [`CHUNK_KEYS`] that
/// can be generated independently. The sequence does not depend on how
/// chunks are distributed across threads.
#[derive(Clone, Copy, Debug)]
pub struct NegativeKeys {
    seed: u64,
}

impl NegativeKeys {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Keys `[chunk * CHUNK_KEYS, chunk * CHUNK_KEYS + len)` of the stream.
    pub fn chunk(&self, chunk: u64, len: u64) -> impl Iterator<Item = u64> {
        debug_assert!(len <= CHUNK_KEYS);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk + 1);
        (0..len).map(move |_| rng.next_u64() | 1)
    }

    /// The first `n` keys.
    pub fn take(&self, n: u64) -> impl Iterator<Item = u64> + '_ {
        let chunks = n.div_ceil(CHUNK_KEYS);
        (0..chunks).flat_map(move |c| {
            let len = CHUNK_KEYS.min(n - c * CHUNK_KEYS);
            self.chunk(c, len)
        })
    }
}
