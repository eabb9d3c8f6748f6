//! Seeded, independently addressable random streams.
//!
//! A stream is identified by a master seed plus a path of integer tags
//! (for example scenario hash, trajectory index, purpose). Distinct paths
//! give statistically independent ChaCha streams; the same path always
//! reproduces the same sequence.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed and a tag path into one 64-bit value.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &tag in path {
        state ^= tag.wrapping_mul(0xd6e8_feb8_6659_fd93);
        acc ^= splitmix64(&mut state);
        state = acc;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, path: &[u64]) -> Self {
        let mut state = derive_key(seed, path);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RandomStream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Child stream addressed by one extra tag; does not advance `self`.
    pub fn child(seed: u64, path: &[u64], tag: u64) -> Self {
        let mut full = path.to_vec();
        full.push(tag);
        Self::new(seed, &full)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
