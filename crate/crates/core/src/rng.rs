//! Deterministic stream derivation.
//!
//! Every random decision in the pipeline draws from a ChaCha stream derived
//! from a run seed plus a path of integer tags, so any (seed, episode) or
//! (seed, round, slot) result is reproducible in isolation and independent of
//! evaluation order (sequential or parallel).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream-purpose tags. Keeping them in one place avoids accidental collisions.
pub mod tag {
    pub const EPISODE: u64 = 0x01;
    pub const SCORE: u64 = 0x02;
    pub const TRAJECTORY: u64 = 0x03;
    pub const PROPOSE: u64 = 0x04;
    pub const PLAN: u64 = 0x05;
    pub const SELECT: u64 = 0x06;
    pub const COLLECT: u64 = 0x07;
    pub const QBC: u64 = 0x08;
    pub const REJUVENATE: u64 = 0x09;
    pub const ENV_RESET: u64 = 0x0a;
    pub const ROUND: u64 = 0x0b;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag path into a single 64-bit stream id.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix(seed);
    for &t in tags {
        acc = splitmix(acc ^ splitmix(t));
    }
    acc
}

/// Derives an independent ChaCha stream for (seed, tag path).
pub fn derive(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let id = mix(seed, tags);
    let mut key = [0u8; 32];
    let mut z = id;
    for chunk in key.chunks_mut(8) {
        z = splitmix(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
