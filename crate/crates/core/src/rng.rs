//! Seed derivation. One master seed fans out into independent, platform-stable
//! streams: stream i of run j never collides with stream i of run j+1, and
//! parallel/serial execution see identical bits.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream))
}

/// Deterministic RNG for a (master, stream) pair.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

/// Stream tags so independent consumers of one master seed never overlap.
pub mod streams {
    pub const NET_TOPOLOGY: u64 = 0x10;
    pub const NET_PHYSIOLOGY: u64 = 0x11;
    pub const DATA_SUBSET: u64 = 0x20;
    pub const EMBED_INIT: u64 = 0x30;
    pub const EMBED_NEGATIVES: u64 = 0x31;
    pub const ANN_INIT: u64 = 0x40;
    pub const ANN_PICKS: u64 = 0x41;
    /// Per-stimulus streams start here; add the stimulus' dataset index.
    pub const STIMULUS_BASE: u64 = 0x1_0000;
}
