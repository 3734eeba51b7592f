//! Pinned pseudo-random generator: xoshiro256** seeded through splitmix64.
//!
//! Every seeded operation in the pipeline (sampling, annotation order, mock
//! provider) draws from this generator so runs reproduce across platforms.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub type PinnedRng = Xoshiro256StarStar;

pub fn seeded(seed: u64) -> PinnedRng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Uniform draw from `0..bound` by rejection, so no modulo bias.
pub fn below(rng: &mut PinnedRng, bound: u64) -> u64 {
    assert!(bound > 0, "bound must be positive");
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let r = rng.next_u64();
        if r >= threshold {
            return r % bound;
        }
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit(rng: &mut PinnedRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// splitmix64 finalizer; used to derive sub-seeds from composite keys.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds several words into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| mix(acc ^ mix(p)))
}
