//! Relay-network geometry, large-scale gains, block-static Rayleigh channels
//! and their mismatched (error-perturbed) observations.
//!
//! Distances are relative to the source-destination distance, which is 1.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::random::{complex_normal_matrix, complex_normal_vector};
use crate::spectral::HermitianMatrix;
use crate::{CMatrix, CVector, Error, Result};

pub const MIN_SOURCE_RELAY_DISTANCE: f64 = 0.5;
pub const MAX_SOURCE_RELAY_DISTANCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub source_relay: Vec<f64>,
    /// Relay-source-destination angle of each relay, radians.
    pub angles: Vec<f64>,
    pub relay_destination: Vec<f64>,
}

impl NetworkGeometry {
    /// Builds a geometry from source-relay distances and angles; the
    /// relay-destination leg follows from the law of cosines.
    pub fn from_polar(source_relay: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if source_relay.len() != angles.len() {
            return Err(Error::Dimension(format!(
                "{} distances but {} angles",
                source_relay.len(),
                angles.len()
            )));
        }
        let relay_destination = source_relay
            .iter()
            .zip(&angles)
            .map(|(&d, &theta)| relay_destination_distance(d, theta))
            .collect();
        Ok(Self {
            source_relay,
            angles,
            relay_destination,
        })
    }

    pub fn relays(&self) -> usize {
        self.source_relay.len()
    }
}

/// `sqrt(d^2 + 1 - 2 d cos(theta))`.
pub fn relay_destination_distance(source_relay: f64, angle: f64) -> f64 {
    (source_relay * source_relay + 1.0 - 2.0 * source_relay * angle.cos()).sqrt()
}

pub fn sample_geometry<R: Rng + ?Sized>(rng: &mut R, relays: usize) -> NetworkGeometry {
    let mut source_relay = Vec::with_capacity(relays);
    let mut angles = Vec::with_capacity(relays);
    for _ in 0..relays {
        source_relay.push(rng.random_range(MIN_SOURCE_RELAY_DISTANCE..=MAX_SOURCE_RELAY_DISTANCE));
        angles.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
    }
    NetworkGeometry::from_polar(source_relay, angles).expect("lengths match")
}

/// Distance-based path-loss amplitude gain `sqrt(L) / sqrt(d^rho)`.
pub fn path_loss_gain(l_linear: f64, distance: f64, rho: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {distance}"
        )));
    }
    if !(l_linear > 0.0) {
        return Err(Error::Domain(format!(
            "reference loss must be positive, got {l_linear}"
        )));
    }
    Ok(l_linear.sqrt() / distance.powf(rho).sqrt())
}

/// `10^(sigma_s * eta / 10)` for a given standard-normal draw `eta`.
pub fn shadowing_from_draw(sigma_s_db: f64, eta: f64) -> f64 {
    10f64.powf(sigma_s_db * eta / 10.0)
}

pub fn shadowing_gain<R: Rng + ?Sized>(rng: &mut R, sigma_s_db: f64) -> f64 {
    let eta: f64 = rng.sample(StandardNormal);
    shadowing_from_draw(sigma_s_db, eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    /// Reference path loss at the destination, linear.
    pub l_linear: f64,
    pub rho: f64,
    pub sigma_s_db: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            l_linear: 10.0,
            rho: 2.0,
            sigma_s_db: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleGains {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub params: PropagationParams,
}

impl LargeScaleGains {
    /// Path loss from each relay's distance to the destination, one
    /// shadowing draw per relay.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        geometry: &NetworkGeometry,
        params: PropagationParams,
    ) -> Result<Self> {
        let gamma = geometry
            .relay_destination
            .iter()
            .map(|&d| path_loss_gain(params.l_linear, d, params.rho))
            .collect::<Result<Vec<_>>>()?;
        let beta = (0..geometry.relays())
            .map(|_| shadowing_gain(rng, params.sigma_s_db))
            .collect();
        Ok(Self {
            gamma,
            beta,
            params,
        })
    }

    /// Per-relay amplitude `gamma_m * beta_m`.
    pub fn amplitude(&self, relay: usize) -> f64 {
        self.gamma[relay] * self.beta[relay]
    }

    pub fn relays(&self) -> usize {
        self.gamma.len()
    }
}

/// Source-relay channels `F` (M x K) and relay-destination channel `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueChannels {
    pub f: CMatrix,
    pub g: CVector,
}

impl TrueChannels {
    pub fn relays(&self) -> usize {
        self.g.len()
    }

    pub fn sources(&self) -> usize {
        self.f.ncols()
    }

    pub fn f_col(&self, k: usize) -> CVector {
        self.f.column(k).into_owned()
    }
}

/// Draws unit-variance Rayleigh channels and scales row `m` of `F` and entry
/// `m` of `g` by `gamma_m * beta_m`.
pub fn sample_true_channels<R: Rng + ?Sized>(
    rng: &mut R,
    gains: &LargeScaleGains,
    sources: usize,
) -> TrueChannels {
    let m = gains.relays();
    let mut f = complex_normal_matrix(rng, m, sources, 1.0);
    let mut g = complex_normal_vector(rng, m, 1.0);
    for relay in 0..m {
        let a = gains.amplitude(relay);
        f.row_mut(relay).scale_mut(a);
        g[relay] *= a;
    }
    TrueChannels { f, g }
}

/// Observed channels `F^ = F + E`, `g^ = g + e` at mismatch level `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchedChannels {
    pub f_hat: CMatrix,
    pub g_hat: CVector,
    pub e_f: CMatrix,
    pub e_g: CVector,
    pub epsilon: f64,
}

impl MismatchedChannels {
    pub fn f_hat_col(&self, k: usize) -> CVector {
        self.f_hat.column(k).into_owned()
    }
}

/// Uniform draw on `(0, eps_max]`.
pub fn draw_epsilon<R: Rng + ?Sized>(rng: &mut R, eps_max: f64) -> f64 {
    let u: f64 = rng.random();
    eps_max * (1.0 - u)
}

/// Per-trial mismatch: draws `epsilon` on `(0, eps_max]` and one set of
/// errors at that level.
pub fn apply_mismatch<R: Rng + ?Sized>(
    rng: &mut R,
    channels: &TrueChannels,
    eps_max: f64,
) -> Result<MismatchedChannels> {
    if !(eps_max > 0.0) {
        return Err(Error::Domain(format!("eps_max must be positive, got {eps_max}")));
    }
    let epsilon = draw_epsilon(rng, eps_max);
    Ok(observe(rng, channels, epsilon))
}

/// Errors at a fixed `epsilon`.
///
/// Entries of `e_k` are i.i.d. complex normal with variance
/// `epsilon * ||f_k f_k^H||_F = epsilon * ||f_k||^2`; `e` likewise with `g`.
pub fn observe<R: Rng + ?Sized>(
    rng: &mut R,
    channels: &TrueChannels,
    epsilon: f64,
) -> MismatchedChannels {
    let (m, k) = channels.f.shape();
    let mut e_f = CMatrix::zeros(m, k);
    for col in 0..k {
        let var = epsilon * channels.f.column(col).norm_squared();
        e_f.set_column(col, &complex_normal_vector(rng, m, var));
    }
    let e_g = complex_normal_vector(rng, m, epsilon * channels.g.norm_squared());
    MismatchedChannels {
        f_hat: &channels.f + &e_f,
        g_hat: &channels.g + &e_g,
        e_f,
        e_g,
        epsilon,
    }
}

#[derive(Debug, Clone)]
pub struct PerturbedCovariance {
    pub matrix: HermitianMatrix,
    /// The input had zero Frobenius norm, so nothing was added.
    pub degenerate: bool,
}

/// Additive Frobenius-norm perturbation `R + epsilon ||R||_F I`.
pub fn perturb_covariance(r: &HermitianMatrix, epsilon: f64) -> PerturbedCovariance {
    let norm = r.frobenius_norm();
    PerturbedCovariance {
        matrix: r.add_identity(epsilon * norm),
        degenerate: norm == 0.0,
    }
}

/// Magnitude of the largest entry difference; used by tests and callers that
/// need a scale-free "bit-identical" check.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
