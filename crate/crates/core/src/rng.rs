//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by
//! `(root seed, stream name, index)`. Streams with different names or
//! indices are independent; the same triple always yields the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives a child seed for the named stream.
pub fn derive_seed(seed: u64, stream: &str, index: u64) -> u64 {
    splitmix(splitmix(seed ^ fnv1a(stream)) ^ splitmix(index.wrapping_mul(GOLDEN)))
}

pub fn stream(seed: u64, name: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, name, index))
}
