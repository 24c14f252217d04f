//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, index)`. Child streams are derived by
//! mixing the parent index with a work-item number, so any work item can be
//! regenerated without replaying the ones before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed to samplers.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(seed: u64) -> Self {
        Self { seed, index: 0 }
    }

    pub const fn with_index(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Child stream for work item `k`.
    pub const fn substream(&self, k: u64) -> Self {
        Self {
            seed: self.seed,
            index: splitmix64(self.index ^ splitmix64(k.wrapping_add(0xD1B5_4A32_D192_ED03))),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}
