//! Deterministic per-frame random streams.
//!
//! Frame `l` always draws from the ChaCha8 stream `l` keyed by the master seed,
//! so a frame can be regenerated on its own, on any worker, in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Key for sensor-fixed randomness (hot pixel placement), disjoint from frame keys.
const SENSOR_DOMAIN: u64 = 0x5eed_5e45_0a11_b0b5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngPolicy {
    pub master_seed: u64,
}

impl RngPolicy {
    pub const fn new(master_seed: u64) -> Self {
        RngPolicy { master_seed }
    }

    /// Substream for frame `index`.
    pub fn frame_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// Substream for properties of the sensor itself, identical for every frame.
    pub fn sensor_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed ^ SENSOR_DOMAIN);
        rng.set_stream(u64::MAX);
        rng
    }
}
