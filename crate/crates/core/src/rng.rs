//! Seeded generators. Every source of randomness in the crate is a
//! [`LabRng`] derived from an explicit seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child stream; `tag` separates uses of one parent seed.
pub fn derive(seed: u64, tag: u64) -> LabRng {
    seeded(splitmix(seed ^ splitmix(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Draws a fresh seed from a running generator.
pub fn next_seed(rng: &mut LabRng) -> u64 {
    rng.next_u64()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
