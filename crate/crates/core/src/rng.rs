//! Deterministic, coordination-free random streams.
//!
//! Every random draw in the crate comes from a [`SeedSpec`]: a master seed
//! selects the ChaCha8 key and the stream index selects one of its 2^64
//! independent streams. Monte Carlo estimators assign stream indices by path
//! number, so results never depend on how work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// The same master seed, `offset` streams further along.
    pub fn offset(self, offset: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_index: self
                .stream_index
                .checked_add(offset)
                .expect("stream index overflow"),
        }
    }

    pub fn rng(self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

impl From<u64> for SeedSpec {
    fn from(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }
}

/// Fills `out` with independent standard normal draws.
pub fn fill_normals<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}
