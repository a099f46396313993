//! Random draws shared by the channel and signal models, and the seed
//! derivation used by the harness.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, CVector, C64};

/// Circularly-symmetric complex normal with total variance `variance`
/// (`variance/2` per real dimension).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng, variance))
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    // Column-major fill so that column k only depends on draws for k.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, variance);
        }
    }
    m
}

/// SplitMix64 finalizer; a bijective 64-bit mixer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of Monte Carlo trial `trial` under the experiment seed `seed`.
///
/// The sweep point does not enter the derivation, so every point of a sweep
/// replays the same channel realizations.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}
