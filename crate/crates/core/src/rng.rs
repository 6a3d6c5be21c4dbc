//! Labelled, splittable seed streams.
//!
//! Every random consumer in the crate takes a [`SeedStream`]. Child streams are
//! derived from a parent by label or index, so a single master seed fixes every
//! draw of an experiment regardless of scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub const fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream for a textual label.
    pub fn derive(&self, label: &str) -> SeedStream {
        // FNV-1a over the label, then mixed with the parent seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        SeedStream::new(splitmix64(self.seed ^ splitmix64(h)))
    }

    /// Child stream for a replication or sample index.
    pub fn index(&self, i: u64) -> SeedStream {
        SeedStream::new(splitmix64(
            splitmix64(self.seed).wrapping_add(i.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        ))
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

impl From<u64> for SeedStream {
    fn from(seed: u64) -> Self {
        SeedStream::new(seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
