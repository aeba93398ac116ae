//! Hierarchical random streams.
//!
//! Every random decision in a run draws from a stream whose seed is derived
//! from the master seed and a path of integer tags (generation, operation,
//! index). Work items own their stream, so results never depend on how the
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Operation tags used as the second level of the stream hierarchy.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const MATE: u64 = 2;
    pub const SLOT: u64 = 3;
    pub const PERSONS: u64 = 10;
    pub const HOUSEHOLDS: u64 = 11;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed(u64);

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        StreamSeed(master)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Derives an independent child seed for `tag`.
    pub fn child(self, tag: u64) -> StreamSeed {
        StreamSeed(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
