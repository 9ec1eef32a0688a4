//! Seeded random streams.
//!
//! A single root seed is split into independent ChaCha streams keyed by
//! purpose and index, so trials and sampling roles never share draws and can
//! run in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Subspace = 1,
    Coefficients = 2,
    Mask = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream for `purpose`, indexed by `index` (e.g. a trial or draw number).
    pub fn stream(&self, purpose: Purpose, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(((purpose as u64) << 48) ^ index);
        rng
    }

    /// A child seed for trial `index`, so that each trial can be replayed alone.
    pub fn child_seed(&self, index: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
