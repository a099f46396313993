//! Random instance builders shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaybf::random::{complex_normal_matrix, complex_normal_vector};
use relaybf::signals::{exact_moments, MomentSet, SourceConfig};
use relaybf::spectral::HermitianMatrix;
use relaybf::{CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, m: usize) -> HermitianMatrix {
    let b = complex_normal_matrix(rng, m, m, 1.0);
    HermitianMatrix::from_hermitian_part(&b).unwrap()
}

/// `B B^H / m` plus a small ridge, so the result is positive definite.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, m: usize) -> HermitianMatrix {
    let b = complex_normal_matrix(rng, m, m, 1.0);
    let a = &b * b.adjoint() / C64::new(m as f64, 0.0);
    HermitianMatrix::from_hermitian_part(&a).unwrap().add_identity(1e-3)
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CVector {
    let v = complex_normal_vector(rng, m, 1.0);
    let n = v.norm();
    v.unscale(n)
}

/// A well-conditioned weight-design instance: Rayleigh channels, desired
/// power 1, interferers in `[0.1, 1]`, noise in `[0.05, 1]`. Returns the
/// channels, exact moments and a total power in `[0.5, 5]`.
pub struct Instance {
    pub f: CMatrix,
    pub g: CVector,
    pub sources: SourceConfig,
    pub noise_power: f64,
    pub moments: MomentSet,
    pub total_power: f64,
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Instance {
    let f = complex_normal_matrix(rng, m, k, 1.0);
    let g = complex_normal_vector(rng, m, 1.0);
    let mut powers = vec![1.0];
    powers.extend((1..k).map(|_| rng.random_range(0.1..1.0)));
    let sources = SourceConfig::new(powers).unwrap();
    let noise_power = rng.random_range(0.05..1.0);
    let moments = exact_moments(&f, &g, &sources, noise_power).unwrap();
    Instance {
        f,
        g,
        sources,
        noise_power,
        moments,
        total_power: rng.random_range(0.5..5.0),
    }
}

/// Composite Simpson rule with `intervals` (even) subintervals.
pub fn simpson<F: Fn(f64) -> CMatrix>(f: F, a: f64, b: f64, intervals: usize) -> CMatrix {
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * C64::new(weight, 0.0);
    }
    acc * C64::new(h / 3.0, 0.0)
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
