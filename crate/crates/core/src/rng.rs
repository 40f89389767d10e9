//! Reproducible random streams.
//!
//! A stream is ChaCha8 keyed by the 64-bit `seed` (little-endian in the first
//! eight key bytes, remaining 24 key bytes zero) with the ChaCha stream
//! (nonce) set to `stream_id`, starting at block 0. The byte sequence is
//! therefore fixed by `(seed, stream_id)` on every platform, and distinct
//! stream ids address disjoint keystreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one reproducible random stream; experiments use one stream per
/// replicate so results do not depend on scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream id for replicate `rep` of an experiment at dimension `n`.
    ///
    /// Dimensions and replicates are packed into disjoint bit ranges so that
    /// every `(n, rep)` cell of a grid draws from its own stream.
    pub const fn cell(seed: u64, n: usize, rep: u64) -> Self {
        Self::new(seed, ((n as u64) << 32) | (rep & 0xFFFF_FFFF))
    }
}
