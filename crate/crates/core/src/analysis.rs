//! MSE of channel estimates under the additive Frobenius-norm mismatch
//! model, its eigenvalue-spread bounds, the subspace-processing MSE and the
//! MMSE/SINR relation of the output.
//!
//! The closed forms assume channels normalized to `E[f^H f] = 1`.

use rand::Rng;

use crate::random::{complex_normal_matrix, complex_normal_vector};
use crate::spectral::HermitianMatrix;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Largest eigenvalue and spread `lambda_max - lambda_min` of an
/// `m x m` covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSpreadSpec {
    lambda_max: f64,
    spread: f64,
    m: usize,
}

impl EigenSpreadSpec {
    pub fn new(lambda_max: f64, spread: f64, m: usize) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::Domain(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if !(0.0..=lambda_max).contains(&spread) {
            return Err(Error::Domain(format!(
                "spread {spread} outside [0, lambda_max = {lambda_max}]"
            )));
        }
        if m < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {m}")));
        }
        Ok(Self {
            lambda_max,
            spread,
            m,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_max - self.spread
    }

    pub fn dim(&self) -> usize {
        self.m
    }
}

/// `(eps_max M / 2) ||R||_F`: trace of the error covariance
/// `epsilon ||R||_F I` averaged over `epsilon ~ U(0, eps_max]`.
pub fn mse_additive(r: &HermitianMatrix, eps_max: f64) -> f64 {
    0.5 * eps_max * r.dim() as f64 * r.frobenius_norm()
}

/// `sqrt(sum lambda^2)`.
pub fn frobenius_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Extremes of [`mse_additive`] over spectra with the given top eigenvalue
/// and spread: one eigenvalue at `lambda_max` and the rest at `lambda_min`
/// (lower), or the reverse (upper).
pub fn mse_bounds(spec: &EigenSpreadSpec, eps_max: f64) -> MseBounds {
    let m = spec.m as f64;
    let (l, s) = (spec.lambda_max, spec.spread);
    let lower_sq = m * l * l - 2.0 * (m - 1.0) * s * l + (m - 1.0) * s * s;
    let upper_sq = m * l * l - 2.0 * s * l + s * s;
    assert!(
        lower_sq >= 0.0 && upper_sq >= 0.0,
        "negative radicand for a valid spread spec"
    );
    let factor = 0.5 * eps_max * m;
    MseBounds {
        lower: factor * lower_sq.sqrt(),
        upper: factor * upper_sq.sqrt(),
    }
}

/// Lower bounds summed over the source channels, and the lower bound of the
/// second-hop channel.
pub fn mmse_channels(specs_f: &[EigenSpreadSpec], spec_g: &EigenSpreadSpec, eps_max: f64) -> (f64, f64) {
    let f = specs_f.iter().map(|s| mse_bounds(s, eps_max).lower).sum();
    (f, mse_bounds(spec_g, eps_max).lower)
}

/// MSE of the subspace-projected cross-correlation estimate:
/// `((1/3) P_s^2 eps^2 r^2 + (1/2) P_n P_s eps r + P_n^2) tau + 1` with
/// `r = E[||R_f||_F]`.
pub fn mse_subspace(r_norm: f64, source_power: f64, noise_power: f64, eps_max: f64, tau: f64) -> f64 {
    let ps = source_power;
    let quad = ps * ps * eps_max * eps_max * r_norm * r_norm / 3.0
        + 0.5 * noise_power * ps * eps_max * r_norm
        + noise_power * noise_power;
    quad * tau + 1.0
}

/// Largest `tau` for which [`mse_subspace`] stays below [`mse_additive`]
/// evaluated at `||R_f||_F = sqrt(M) lambda_max`.
///
/// A non-positive value means no `tau >= 0` satisfies the condition.
pub fn tau_threshold(lambda_max: f64, m: usize, source_power: f64, noise_power: f64, eps_max: f64) -> f64 {
    let r = (m as f64).sqrt() * lambda_max;
    let numerator = 0.5 * m as f64 * eps_max * r - 1.0;
    let denominator = source_power * source_power * eps_max * eps_max * r * r / 3.0
        + 0.5 * noise_power * source_power * eps_max * r
        + noise_power * noise_power;
    numerator / denominator
}

/// `1 / (1 + SINR_max)`.
pub fn mmse_of_output(sinr_max: f64) -> f64 {
    1.0 / (1.0 + sinr_max)
}

/// `w^H D^-1/2 Theta D^1/2 w` with `w` first scaled to unit norm.
pub fn rayleigh_quotient_lambda(w: &CVector, d: &[f64], theta: &CMatrix) -> Result<f64> {
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("weight vector is zero".into()));
    }
    check_shapes(w, d, theta)?;
    let u = w.unscale(norm);
    let lifted = CVector::from_fn(u.len(), |i, _| u[i] * d[i].sqrt());
    let mapped = theta * lifted;
    let back = CVector::from_fn(u.len(), |i, _| mapped[i] / d[i].sqrt());
    Ok(u.dotc(&back).re)
}

/// `||Theta D^1/2 w - lambda D^1/2 w|| / ||D^1/2 w||`.
pub fn eigenpair_residual(w: &CVector, d: &[f64], theta: &CMatrix, lambda: f64) -> Result<f64> {
    check_shapes(w, d, theta)?;
    let lifted = CVector::from_fn(w.len(), |i, _| w[i] * d[i].sqrt());
    let norm = lifted.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("weight vector is zero".into()));
    }
    Ok((theta * &lifted - &lifted * C64::new(lambda, 0.0)).norm() / norm)
}

fn check_shapes(w: &CVector, d: &[f64], theta: &CMatrix) -> Result<()> {
    let m = w.len();
    if d.len() != m || theta.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "weights of length {m}, diagonal of length {}, operator {}x{}",
            d.len(),
            theta.nrows(),
            theta.ncols()
        )));
    }
    Ok(())
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMatrix {
    let qr = complex_normal_matrix(rng, m, m, 1.0).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        let d = r[(j, j)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            for i in 0..m {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Eigenvalues respecting `spec`: `lambda_max`, `lambda_min`, and the other
/// `M - 2` drawn uniformly between them.
pub fn spectrum_with_spread<R: Rng + ?Sized>(rng: &mut R, spec: &EigenSpreadSpec) -> Vec<f64> {
    let mut ev = vec![spec.lambda_max(), spec.lambda_min()];
    for _ in 2..spec.dim() {
        let u: f64 = rng.random();
        ev.push(spec.lambda_min() + u * spec.spread());
    }
    ev
}

/// `V diag(eigenvalues) V^H` with a random unitary `V`.
pub fn covariance_with_spectrum<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> HermitianMatrix {
    let m = eigenvalues.len();
    let v = random_unitary(rng, m);
    let mut scaled = v.clone();
    for (j, &l) in eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    HermitianMatrix::from_hermitian_part(&(scaled * v.adjoint()))
        .expect("square by construction")
}

/// Monte Carlo estimate of the additive-model MSE: mean of `||e||^2` for
/// `e ~ CN(0, epsilon ||R||_F I)`, `epsilon ~ U(0, eps_max]`.
pub fn empirical_additive_mse<R: Rng + ?Sized>(
    rng: &mut R,
    r: &HermitianMatrix,
    eps_max: f64,
    draws: usize,
) -> f64 {
    let norm = r.frobenius_norm();
    let total: f64 = (0..draws)
        .map(|_| {
            let eps = crate::channel::draw_epsilon(rng, eps_max);
            complex_normal_vector(rng, r.dim(), eps * norm).norm_squared()
        })
        .sum();
    total / draws as f64
}

/// Empirical quantities of the cross-correlation decomposition for one
/// source.
#[derive(Debug, Clone)]
pub struct CrossCorrAnalysis {
    /// Mean of `W g^` over the samples.
    pub xi: CVector,
    /// `P_s,k E[R_f,k + R_e,k] xi` per source.
    pub q_components: Vec<CVector>,
    /// `xi^H E[P_k] xi` for the analysed source.
    pub tau: f64,
    pub mse1: f64,
    pub mse2: f64,
}

/// One sample of the quantities entering the decomposition.
#[derive(Debug, Clone)]
pub struct CrossCorrSample {
    pub w: CVector,
    pub g_hat: CVector,
    /// Projector used for the analysed source.
    pub projector: CMatrix,
    /// Covariance of each source channel.
    pub r_f: Vec<HermitianMatrix>,
}

/// Measures `xi`, the `q_k`, `tau` and both MSE expressions for source
/// `source` from a set of samples.
pub fn measure_cross_correlation(
    samples: &[CrossCorrSample],
    source: usize,
    source_powers: &[f64],
    noise_power: f64,
    eps_max: f64,
) -> Result<CrossCorrAnalysis> {
    let Some(first) = samples.first() else {
        return Err(Error::Domain("no samples".into()));
    };
    let m = first.w.len();
    let k = source_powers.len();
    if source >= k || first.r_f.len() != k {
        return Err(Error::Dimension(format!(
            "source {source} of {k}, samples carry {} covariances",
            first.r_f.len()
        )));
    }
    let n = samples.len() as f64;
    let mut xi = CVector::zeros(m);
    let mut mean_p = CMatrix::zeros(m, m);
    let mut mean_r = vec![CMatrix::zeros(m, m); k];
    let mut mean_norm = vec![0.0; k];
    for s in samples {
        xi += s.w.component_mul(&s.g_hat);
        mean_p += &s.projector;
        for (j, r) in s.r_f.iter().enumerate() {
            mean_r[j] += r.as_matrix();
            mean_norm[j] += r.frobenius_norm();
        }
    }
    xi.unscale_mut(n);
    mean_p.unscale_mut(n);
    for j in 0..k {
        mean_r[j].unscale_mut(n);
        mean_norm[j] /= n;
    }
    let q_components = (0..k)
        .map(|j| {
            // E[R_e] = (eps_max / 2) E[||R_f||_F] I.
            let loaded = &mean_r[j]
                + CMatrix::identity(m, m) * C64::new(0.5 * eps_max * mean_norm[j], 0.0);
            loaded * &xi * C64::new(source_powers[j], 0.0)
        })
        .collect();
    let tau = xi.dotc(&(&mean_p * &xi)).re.max(0.0);
    let mean_r_source = HermitianMatrix::from_hermitian_part(&mean_r[source])?;
    Ok(CrossCorrAnalysis {
        xi,
        q_components,
        tau,
        mse1: mse_additive(&mean_r_source, eps_max),
        mse2: mse_subspace(mean_norm[source], source_powers[source], noise_power, eps_max, tau),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eig_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_additive_arithmetic() {
        let v = mse_additive(&HermitianMatrix::identity(8), 0.2);
        assert!((v - 0.8 * 8f64.sqrt()).abs() < 1e-14);
        assert!((v - 2.2627).abs() < 1e-4);
        assert_eq!(mse_additive(&HermitianMatrix::identity(8), 0.0), 0.0);
    }

    #[test]
    fn mse_additive_matches_error_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = covariance_with_spectrum(&mut rng, &[3.0, 1.0, 0.5, 0.2]);
        let empirical = empirical_additive_mse(&mut rng, &r, 0.6, 200_000);
        let closed = mse_additive(&r, 0.6);
        assert!((empirical / closed - 1.0).abs() < 0.01, "{empirical} vs {closed}");
    }

    #[test]
    fn frobenius_cases() {
        assert!((frobenius_from_eigenvalues(&[1.0, 1.0, 1.0]) - 3f64.sqrt()).abs() < 1e-15);
        assert!((frobenius_from_eigenvalues(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = complex_normal_matrix(&mut rng, 6, 6, 1.0);
        let r = HermitianMatrix::from_hermitian_part(&(&a * a.adjoint())).unwrap();
        let ev = eig_hermitian(&r).eigenvalues;
        assert!((frobenius_from_eigenvalues(&ev) - r.frobenius_norm()).abs() < 1e-10);
    }

    #[test]
    fn spec_validation() {
        assert!(EigenSpreadSpec::new(1.0, 1.5, 8).is_err());
        assert!(EigenSpreadSpec::new(0.0, 0.0, 8).is_err());
        assert!(EigenSpreadSpec::new(1.0, -0.1, 8).is_err());
        assert!(EigenSpreadSpec::new(1.0, 1.0, 8).is_ok());
    }

    #[test]
    fn zero_spread_collapses_bounds() {
        let spec = EigenSpreadSpec::new(2.5, 0.0, 8).unwrap();
        let b = mse_bounds(&spec, 0.2);
        assert_eq!(b.lower, b.upper);
        assert!((b.lower - 0.8 * 8f64.sqrt() * 2.5).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_linear_in_lambda_max() {
        let at = |l: f64| mse_bounds(&EigenSpreadSpec::new(l, 0.9 * l, 8).unwrap(), 0.2);
        let (b1, b2, b5) = (at(1.0), at(2.0), at(5.0));
        assert!((b2.lower - 2.0 * b1.lower).abs() < 1e-12);
        assert!((b5.upper - 5.0 * b1.upper).abs() < 1e-12);
        // Direct evaluation of the slope for M = 8, spread 0.9.
        let lower_slope = 0.8 * (1.0f64 + 7.0 * 0.01).sqrt();
        let upper_slope = 0.8 * (7.0f64 + 0.01).sqrt();
        assert!((b1.lower - lower_slope).abs() < 1e-12);
        assert!((b1.upper - upper_slope).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_is_reached_by_the_limiting_spectrum() {
        let spec = EigenSpreadSpec::new(3.0, 3.0, 8).unwrap();
        let mut ev = vec![3.0];
        ev.extend(std::iter::repeat_n(1e-9, 7));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = covariance_with_spectrum(&mut rng, &ev);
        let b = mse_bounds(&spec, 0.2);
        assert!((mse_additive(&r, 0.2) - b.lower).abs() < 1e-7);
    }

    #[test]
    fn constructed_spectra_are_bracketed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for spread in [0.0, 0.5, 0.9, 1.0] {
            let spec = EigenSpreadSpec::new(2.0, spread * 2.0, 8).unwrap();
            let b = mse_bounds(&spec, 0.3);
            for _ in 0..20 {
                let ev = spectrum_with_spread(&mut rng, &spec);
                let r = covariance_with_spectrum(&mut rng, &ev);
                let v = mse_additive(&r, 0.3);
                assert!(v >= b.lower - 1e-9 && v <= b.upper + 1e-9);
            }
        }
    }

    #[test]
    fn mmse_channels_sums_lower_bounds() {
        let specs = [
            EigenSpreadSpec::new(1.0, 0.5, 8).unwrap(),
            EigenSpreadSpec::new(2.0, 0.1, 8).unwrap(),
            EigenSpreadSpec::new(0.7, 0.7, 8).unwrap(),
        ];
        let g = EigenSpreadSpec::new(1.5, 0.2, 8).unwrap();
        let (f, gm) = mmse_channels(&specs, &g, 0.4);
        let expected: f64 = specs.iter().map(|s| mse_bounds(s, 0.4).lower).sum();
        assert!((f - expected).abs() < 1e-15);
        assert_eq!(gm, mse_bounds(&g, 0.4).lower);

        let (single, _) = mmse_channels(&specs[..1], &g, 0.4);
        assert_eq!(single, mse_bounds(&specs[0], 0.4).lower);

        let flat: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&l| EigenSpreadSpec::new(l, 0.0, 8).unwrap())
            .collect();
        let (f, _) = mmse_channels(&flat, &g, 0.4);
        assert!((f - 0.2 * 8.0 * 8f64.sqrt() * 6.0).abs() < 1e-12);
    }

    #[test]
    fn mse_subspace_cases() {
        assert_eq!(mse_subspace(3.0, 1.0, 0.1, 0.2, 0.0), 1.0);
        assert!((mse_subspace(3.0, 1.0, 0.1, 0.0, 2.0) - (0.01 * 2.0 + 1.0)).abs() < 1e-15);
        let mut prev = mse_subspace(0.0, 1.0, 0.1, 0.2, 0.5);
        for i in 1..100 {
            let v = mse_subspace(i as f64 * 0.1, 1.0, 0.1, 0.2, 0.5);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn tau_threshold_boundary_and_direct_check() {
        // (M/2) eps sqrt(M) lambda = 1.
        let lambda = 1.0 / (4.0 * 0.2 * 8f64.sqrt());
        assert!(tau_threshold(lambda, 8, 1.0, 0.1, 0.2).abs() < 1e-12);

        let t = tau_threshold(1.0, 8, 1.0, 0.1, 0.2);
        assert!(t > 0.0);
        let bound = 8f64.sqrt();
        let additive = 0.5 * 0.2 * 8.0 * bound;
        let below = mse_subspace(bound, 1.0, 0.1, 0.2, t * (1.0 - 1e-9));
        let above = mse_subspace(bound, 1.0, 0.1, 0.2, t * (1.0 + 1e-6));
        assert!(below < additive);
        assert!(above > additive);

        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = tau_threshold(1.0, 8, 1.0, i as f64 * 0.05, 0.2);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn mmse_cases() {
        assert_eq!(mmse_of_output(0.0), 1.0);
        assert_eq!(mmse_of_output(1.0), 0.5);
        assert_eq!(mmse_of_output(f64::INFINITY), 0.0);
    }

    #[test]
    fn rayleigh_quotient_diagonal_and_linear() {
        let theta = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(1.0, 0.0)]));
        let w = CVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 0.0)]);
        let l = rayleigh_quotient_lambda(&w, &[1.0, 1.0], &theta).unwrap();
        assert!((l - 2.0).abs() < 1e-15);
        let l3 = rayleigh_quotient_lambda(&w, &[1.0, 1.0], &(theta * C64::new(3.0, 0.0))).unwrap();
        assert!((l3 - 6.0).abs() < 1e-14);
        assert!(rayleigh_quotient_lambda(&CVector::zeros(2), &[1.0, 1.0], &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 6);
        assert!((u.adjoint() * &u - CMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn cross_correlation_tau_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<CrossCorrSample> = (0..50)
            .map(|_| {
                let f: Vec<CVector> = (0..2).map(|_| complex_normal_vector(&mut rng, 4, 0.25)).collect();
                let r_f: Vec<HermitianMatrix> = f.iter().map(HermitianMatrix::outer).collect();
                let dir = f[0].unscale(f[0].norm());
                CrossCorrSample {
                    w: complex_normal_vector(&mut rng, 4, 1.0),
                    g_hat: complex_normal_vector(&mut rng, 4, 0.25),
                    projector: &dir * dir.adjoint(),
                    r_f,
                }
            })
            .collect();
        let a = measure_cross_correlation(&samples, 0, &[1.0, 0.5], 0.1, 0.2).unwrap();
        assert!(a.tau >= 0.0);
        assert_eq!(a.q_components.len(), 2);
        assert!((a.mse2 - mse_subspace(
            samples.iter().map(|s| s.r_f[0].frobenius_norm()).sum::<f64>() / 50.0,
            1.0,
            0.1,
            0.2,
            a.tau
        ))
        .abs()
            < 1e-12);
    }
}
