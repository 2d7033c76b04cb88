//! Counter-based randomness: every generator is addressed by a
//! (seed, stream) pair, so any sub-experiment can be replayed in isolation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A splittable generator. Two instances built from the same (seed, stream)
/// produce identical output forever; distinct streams under one seed are
/// independent for every practical purpose.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh generator under the same seed, positioned at the start of
    /// `stream`. Independent of any draws already made from `self`.
    pub fn substream(&self, stream: u64) -> StreamRng {
        StreamRng::new(self.seed, stream)
    }

    /// Draws a seed for a subordinate object (net, shared coins, ...).
    pub fn derive_seed(&mut self) -> u64 {
        self.next_u64()
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
