//! Splittable deterministic random streams.
//!
//! Sampling, shuffling and weight init all draw from [`RngStream`]s derived
//! from a single run seed. A stream is a cheap copyable key; `derive(salt)`
//! produces an independent child stream. Parallel workers each derive their
//! own stream from their unit index, so results do not depend on the
//! execution schedule and the sequential and rayon code paths produce
//! identical output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Key for a deterministic random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
}

// splitmix64 finalizer; decorrelates nearby keys.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { key: mix(seed) }
    }

    /// Child stream independent of this one for distinct salts.
    pub fn derive(self, salt: u64) -> Self {
        Self {
            key: mix(self.key ^ mix(salt)),
        }
    }

    /// Materialize the stream as a concrete RNG.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
