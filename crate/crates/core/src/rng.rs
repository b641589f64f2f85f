//! Seeded randomness.
//!
//! Every random draw in the crate comes from a [`SeededRng`] (ChaCha20, whose
//! output stream is fixed by its 64-bit seed across platforms and releases).
//! Independent trials derive their own seeds with [`mix64`].

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type SeededRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Child seed for trial `index` of a run seeded with `base`.
///
/// SplitMix64's finalizer applied to `base ^ (index * GOLDEN_GAMMA)`. Both steps
/// are bijections of `u64`, so distinct indices under one base never collide.
pub fn mix64(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(GOLDEN_GAMMA);
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval (-1/2, 1/2).
pub fn uniform_centered<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    u - 0.5
}
