//! Two-hop amplify-and-forward signal chain and its second-order moments.
//!
//! Channels are block-static within a trial, so the expectations over
//! symbols and noise collapse to deterministic quadratic forms of the given
//! channels. Averaging over channel realizations happens in the harness.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::random::{complex_normal, complex_normal_vector};
use crate::spectral::HermitianMatrix;
use crate::{db_to_linear, CMatrix, CVector, Error, Result, C64};

/// Source powers; source 0 is the desired one, the rest interfere. Symbol
/// variance is fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    powers: Vec<f64>,
}

impl SourceConfig {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::Domain("at least one source is required".into()));
        }
        if let Some(k) = powers.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!(
                "source {k} has non-positive power {}",
                powers[k]
            )));
        }
        Ok(Self { powers })
    }

    pub fn sources(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn power(&self, k: usize) -> f64 {
        self.powers[k]
    }
}

/// One realization of the chain.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub s: CVector,
    pub relay_noise: CVector,
    pub x: CVector,
    pub y: CVector,
    pub destination_noise: C64,
    pub z: C64,
}

/// `s_k = sqrt(P_k) b_k` with `b_k` uniform on `{(±1 ± j)/sqrt(2)}`.
pub fn generate_symbols<R: Rng + ?Sized>(rng: &mut R, sources: &SourceConfig) -> CVector {
    CVector::from_iterator(
        sources.sources(),
        sources.powers().iter().map(|&p| {
            let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            C64::new(re, im) * p.sqrt()
        }),
    )
}

/// `x = F s + nu`, `nu ~ CN(0, P_n I)`. Returns `(x, nu)`.
pub fn relay_receive<R: Rng + ?Sized>(
    f: &CMatrix,
    s: &CVector,
    rng: &mut R,
    noise_power: f64,
) -> (CVector, CVector) {
    let nu = complex_normal_vector(rng, f.nrows(), noise_power);
    (f * s + &nu, nu)
}

/// `y = W^H x`, i.e. `y_m = conj(w_m) x_m`.
///
/// The conjugate makes the destination power of source `k` equal to
/// `w^H R_k w` with `R_k = P_k (f_k ⊙ g)(f_k ⊙ g)^H`, so weights designed
/// on the moments are the weights the relays apply.
pub fn relay_transmit(w: &CVector, x: &CVector) -> CVector {
    w.conjugate().component_mul(x)
}

/// `z = g^T y + n`, `n ~ CN(0, P_n)`. Returns `(z, n)`.
pub fn destination_receive<R: Rng + ?Sized>(
    g: &CVector,
    y: &CVector,
    rng: &mut R,
    noise_power: f64,
) -> (C64, C64) {
    let n = complex_normal(rng, noise_power);
    (g.dot(y) + n, n)
}

/// Runs the whole chain once with weights `w` over channels `(f, g)`.
pub fn generate_snapshot<R: Rng + ?Sized>(
    rng: &mut R,
    f: &CMatrix,
    g: &CVector,
    sources: &SourceConfig,
    w: &CVector,
    noise_power: f64,
) -> Snapshot {
    let s = generate_symbols(rng, sources);
    let (x, relay_noise) = relay_receive(f, &s, rng, noise_power);
    let y = relay_transmit(w, &x);
    let (z, destination_noise) = destination_receive(g, &y, rng, noise_power);
    Snapshot {
        s,
        relay_noise,
        x,
        y,
        destination_noise,
        z,
    }
}

/// Second-order moments of one channel realization.
///
/// `r[k] = P_k (f_k ⊙ g)(f_k ⊙ g)^H`; `q = P_n diag(|g_m|^2)` is the
/// forwarded relay-noise covariance; `d` holds the diagonal of the relay
/// power matrix `D`.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub r: Vec<HermitianMatrix>,
    pub q: HermitianMatrix,
    pub d: Vec<f64>,
    pub noise_power: f64,
}

impl MomentSet {
    pub fn relays(&self) -> usize {
        self.d.len()
    }

    /// `Q + sum_{k>=1} R_k`.
    pub fn interference_plus_noise(&self) -> HermitianMatrix {
        self.r
            .iter()
            .skip(1)
            .fold(self.q.clone(), |acc, rk| acc.add(rk))
    }
}

/// Moments from channel columns `f[k]` and `g` (true or estimated).
pub fn moments_from_vectors(
    f: &[CVector],
    g: &CVector,
    sources: &SourceConfig,
    noise_power: f64,
) -> Result<MomentSet> {
    let m = g.len();
    if f.len() != sources.sources() {
        return Err(Error::Dimension(format!(
            "{} channel columns for {} sources",
            f.len(),
            sources.sources()
        )));
    }
    if let Some(bad) = f.iter().position(|fk| fk.len() != m) {
        return Err(Error::Dimension(format!(
            "channel column {bad} has length {}, expected {m}",
            f[bad].len()
        )));
    }
    let r = f
        .iter()
        .zip(sources.powers())
        .map(|(fk, &p)| HermitianMatrix::outer(&fk.component_mul(g)).scale(p))
        .collect();
    let q_diag: Vec<f64> = g.iter().map(|gm| noise_power * gm.norm_sqr()).collect();
    let d = (0..m)
        .map(|relay| {
            f.iter()
                .zip(sources.powers())
                .map(|(fk, &p)| p * fk[relay].norm_sqr())
                .sum::<f64>()
                + noise_power
        })
        .collect();
    Ok(MomentSet {
        r,
        q: HermitianMatrix::from_diagonal(&q_diag),
        d,
        noise_power,
    })
}

/// Exact moments of a block-static realization `(F, g)`.
pub fn exact_moments(
    f: &CMatrix,
    g: &CVector,
    sources: &SourceConfig,
    noise_power: f64,
) -> Result<MomentSet> {
    let cols: Vec<CVector> = (0..f.ncols()).map(|k| f.column(k).into_owned()).collect();
    moments_from_vectors(&cols, g, sources, noise_power)
}

/// `w^H R_1 w / (P_n + w^H (Q + sum_{k>=2} R_k) w)`.
///
/// Returns `0` for `w = 0` and `+inf` when the denominator vanishes with a
/// non-zero numerator.
pub fn output_sinr(w: &CVector, moments: &MomentSet) -> f64 {
    let signal = moments.r[0].quadratic_form(w);
    let interference: f64 = moments.q.quadratic_form(w)
        + moments.r.iter().skip(1).map(|rk| rk.quadratic_form(w)).sum::<f64>();
    let denom = moments.noise_power + interference;
    if signal <= 0.0 {
        0.0
    } else if denom <= 0.0 {
        f64::INFINITY
    } else {
        signal / denom
    }
}

/// Total relay transmit power `w^H D w`.
pub fn relay_power(w: &CVector, d: &[f64]) -> f64 {
    w.iter().zip(d).map(|(wm, dm)| dm * wm.norm_sqr()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget {
    pub noise_power: f64,
    pub interferer_powers: Vec<f64>,
}

/// Noise power for a target input SNR and the interferer powers for a
/// target INR.
///
/// `P_n = P_desired / 10^(SNR/10)` and the interferers share
/// `P_n 10^(INR/10)`. With `ratio = 1` the split is equal; otherwise the
/// first interferer carries `ratio` times the power of each of the others.
pub fn noise_power_for_snr(
    snr_db: f64,
    inr_db: f64,
    desired_power: f64,
    interferers: usize,
    ratio: f64,
) -> Result<NoiseBudget> {
    if !(desired_power > 0.0) {
        return Err(Error::Domain(format!(
            "desired power must be positive, got {desired_power}"
        )));
    }
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!(
            "interferer power ratio must be positive, got {ratio}"
        )));
    }
    let noise_power = desired_power / db_to_linear(snr_db);
    let total = noise_power * db_to_linear(inr_db);
    let interferer_powers = if interferers == 0 {
        Vec::new()
    } else {
        let weight_sum = ratio + (interferers - 1) as f64;
        (0..interferers)
            .map(|i| {
                let weight = if i == 0 { ratio } else { 1.0 };
                total * weight / weight_sum
            })
            .collect()
    };
    Ok(NoiseBudget {
        noise_power,
        interferer_powers,
    })
}
