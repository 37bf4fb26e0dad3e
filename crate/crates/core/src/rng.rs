//! Seeded random sources shared by the generators and the estimators.
//!
//! Every stochastic routine takes a `u64` seed and builds a [`ChaCha8Rng`] from it,
//! so results are reproducible across runs and platforms. Sub-streams (per trial,
//! per EM iteration) are obtained with [`derive_seed`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of stream indices.
///
/// The derivation folds each index into the state with SplitMix64:
/// `s0 = splitmix64(master)`, `s_{i+1} = splitmix64(s_i ^ index_i)`.
/// It is stable across releases; changing it changes every published result.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |state, &idx| splitmix64(state ^ idx))
}

/// Circularly-symmetric complex Gaussian sample with total variance `variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// A Rademacher sample: +1 or -1 with equal probability.
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
