//! Splittable, counter-based random streams.
//!
//! Every random draw in the crate comes from a [`SeedStream`]: a 64-bit key
//! derived by hashing a master seed with a path of tags (replication index,
//! channel, chunk). The key seeds a ChaCha8 generator, whose output is a pure
//! function of key and block counter, so results do not depend on the order
//! in which streams are created or consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed out by [`SeedStream::rng`].
pub type StreamRng = ChaCha8Rng;

/// Tags separating independent consumers of one seed.
pub mod channel {
    pub const DIFFUSION: u64 = 0x01;
    pub const JUMPS: u64 = 0x02;
    pub const REPLICATION: u64 = 0x10;
    pub const ORACLE_CHUNK: u64 = 0x20;
    pub const FISHER: u64 = 0x30;
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed.wrapping_add(GOLDEN_GAMMA)),
        }
    }

    /// Derives an independent sub-stream identified by `tag`.
    pub fn child(self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1))),
        }
    }

    /// Seed of replication `index` under this master stream.
    pub fn replication_seed(self, index: u64) -> u64 {
        self.child(channel::REPLICATION).child(index).key
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
