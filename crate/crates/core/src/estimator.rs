//! LRCC-RDB: recursive cross-correlation and covariance estimation, subspace
//! projection of the cross-correlation vector, and the eigen solution for
//! the relay weights. Also hosts the perfect-CSI and non-robust baselines.

use nalgebra::linalg::Cholesky;
use rand::Rng;

use crate::channel::{observe, MismatchedChannels, TrueChannels};
use crate::signals::{
    exact_moments, generate_snapshot, moments_from_vectors, output_sinr, MomentSet, SourceConfig,
};
use crate::spectral::{
    eig_hermitian, fix_phase, principal_of, select_principal_count, EigenDecomposition,
    HermitianMatrix,
};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Diagonal loading of the covariance recursions before the first update.
pub const INITIAL_COVARIANCE_LOAD: f64 = 0.01;

/// How channel knowledge reaches the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Per-snapshot channel observations are averaged into covariance
    /// estimates.
    Instantaneous,
    /// Channel covariances are known and fixed; only the cross-correlation
    /// vector is learned.
    Statistics,
}

impl CsiMode {
    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Instantaneous => "instantaneous-CSI",
            CsiMode::Statistics => "second-order-statistics",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    mode: CsiMode,
    scv_iteration: usize,
    covariance_iteration: usize,
    q: CVector,
    r_f: Vec<HermitianMatrix>,
    r_g: HermitianMatrix,
}

impl EstimatorState {
    /// `q(0) = 1`, `R_f,k(0) = R_g(0) = 0.01 I`.
    pub fn new_instantaneous(relays: usize, sources: usize) -> Self {
        let load = HermitianMatrix::identity(relays).scale(INITIAL_COVARIANCE_LOAD);
        Self {
            mode: CsiMode::Instantaneous,
            scv_iteration: 0,
            covariance_iteration: 0,
            q: CVector::from_element(relays, C64::new(1.0, 0.0)),
            r_f: vec![load.clone(); sources],
            r_g: load,
        }
    }

    /// Known covariances, never updated.
    pub fn new_statistics(r_f: Vec<HermitianMatrix>, r_g: HermitianMatrix) -> Result<Self> {
        let m = r_g.dim();
        if let Some(bad) = r_f.iter().position(|r| r.dim() != m) {
            return Err(Error::Dimension(format!(
                "covariance {bad} is {}x{0}, expected {m}x{m}",
                r_f[bad].dim()
            )));
        }
        Ok(Self {
            mode: CsiMode::Statistics,
            scv_iteration: 0,
            covariance_iteration: 0,
            q: CVector::from_element(m, C64::new(1.0, 0.0)),
            r_f,
            r_g,
        })
    }

    pub fn mode(&self) -> CsiMode {
        self.mode
    }

    pub fn iteration(&self) -> usize {
        self.scv_iteration
    }

    pub fn q(&self) -> &CVector {
        &self.q
    }

    pub fn r_f(&self) -> &[HermitianMatrix] {
        &self.r_f
    }

    pub fn r_g(&self) -> &HermitianMatrix {
        &self.r_g
    }

    /// `q(i) = ((i-1) q(i-1) + x z*) / i`.
    pub fn update_scv(&mut self, x: &CVector, z: C64) {
        self.scv_iteration += 1;
        let i = self.scv_iteration as f64;
        let sample = x * z.conj();
        self.q = (&self.q * C64::new(i - 1.0, 0.0) + sample).unscale(i);
    }

    /// Running averages of the observed outer products.
    pub fn update_channel_covariances(&mut self, f_obs: &[CVector], g_obs: &CVector) -> Result<()> {
        if self.mode == CsiMode::Statistics {
            return Err(Error::Mode {
                operation: "update_channel_covariances",
                mode: self.mode.name(),
            });
        }
        if f_obs.len() != self.r_f.len() {
            return Err(Error::Dimension(format!(
                "{} observed source channels, expected {}",
                f_obs.len(),
                self.r_f.len()
            )));
        }
        self.covariance_iteration += 1;
        let i = self.covariance_iteration as f64;
        let blend = |old: &HermitianMatrix, v: &CVector| {
            old.scale(i - 1.0)
                .add(&HermitianMatrix::outer(v))
                .scale(1.0 / i)
        };
        for (r, f) in self.r_f.iter_mut().zip(f_obs) {
            *r = blend(r, f);
        }
        self.r_g = blend(&self.r_g, g_obs);
        Ok(())
    }
}

/// Parameters of the principal-count rule, see
/// [`select_principal_count`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRule {
    pub noise_threshold: f64,
    pub variance_fraction: f64,
    /// Bypasses the rule with a fixed count (clamped to `[1, M]`).
    pub forced: Option<usize>,
}

impl SelectionRule {
    pub fn new(noise_threshold: f64) -> Self {
        Self {
            noise_threshold,
            variance_fraction: 0.95,
            forced: None,
        }
    }

    pub fn count(&self, eigenvalues: &[f64]) -> Result<usize> {
        match self.forced {
            Some(n) => Ok(n.clamp(1, eigenvalues.len().max(1))),
            None => select_principal_count(eigenvalues, self.noise_threshold, self.variance_fraction),
        }
    }
}

/// `eps_max R + (eps_max^2 / 2) ||R||_F I`: the mismatch-perturbed
/// covariance averaged over `epsilon ~ U(0, eps_max]`, times `eps_max`.
pub fn error_spectrum(r: &HermitianMatrix, eps_max: f64) -> HermitianMatrix {
    r.scale(eps_max)
        .add_identity(0.5 * eps_max * eps_max * r.frobenius_norm())
}

#[derive(Debug, Clone)]
pub struct ErrorSpectra {
    pub c_f: Vec<HermitianMatrix>,
    pub c_g: HermitianMatrix,
    pub n_f: Vec<usize>,
    pub n_g: usize,
    pub eig_f: Vec<EigenDecomposition>,
    pub eig_g: EigenDecomposition,
    /// Eigenvalues of the covariances the spectra were built from.
    pub r_eigenvalues_f: Vec<Vec<f64>>,
    pub r_eigenvalues_g: Vec<f64>,
}

/// Builds `C_k` and `C` and selects their principal counts.
///
/// `C = a R + b I` with `a > 0` shares the eigenvectors of `R`, so its
/// decomposition is obtained from that of `R` by the same affine map.
pub fn build_error_spectra(
    r_f: &[HermitianMatrix],
    r_g: &HermitianMatrix,
    eps_max: f64,
    rule: &SelectionRule,
) -> Result<ErrorSpectra> {
    if !(eps_max > 0.0) {
        return Err(Error::Domain(format!("eps_max must be positive, got {eps_max}")));
    }
    let spectrum = |r: &HermitianMatrix| {
        let eig_r = eig_hermitian(r);
        let load = 0.5 * eps_max * eps_max * r.frobenius_norm();
        let eig_c = EigenDecomposition {
            eigenvalues: eig_r.eigenvalues.iter().map(|l| eps_max * l + load).collect(),
            eigenvectors: eig_r.eigenvectors,
        };
        (error_spectrum(r, eps_max), eig_c, eig_r.eigenvalues)
    };
    let mut c_f = Vec::with_capacity(r_f.len());
    let mut eig_f = Vec::with_capacity(r_f.len());
    let mut r_eigenvalues_f = Vec::with_capacity(r_f.len());
    for r in r_f {
        let (c, e, ev) = spectrum(r);
        c_f.push(c);
        eig_f.push(e);
        r_eigenvalues_f.push(ev);
    }
    let (c_g, eig_g, r_eigenvalues_g) = spectrum(r_g);
    let n_f = eig_f
        .iter()
        .map(|e| rule.count(&e.eigenvalues))
        .collect::<Result<Vec<_>>>()?;
    let n_g = rule.count(&eig_g.eigenvalues)?;
    Ok(ErrorSpectra {
        c_f,
        c_g,
        n_f,
        n_g,
        eig_f,
        eig_g,
        r_eigenvalues_f,
        r_eigenvalues_g,
    })
}

/// Unit-norm channel direction estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimates {
    pub f_hat: Vec<CVector>,
    pub g_hat: CVector,
}

/// Projection norms below this are treated as zero.
const PROJECTION_FLOOR: f64 = 1e-300;

fn project_normalized(eig: &EigenDecomposition, n: usize, q: &CVector) -> Result<CVector> {
    let p = eig.principal_projector(n).apply(q);
    let norm = p.norm();
    if !(norm > PROJECTION_FLOOR) {
        return Err(Error::DegenerateProjection { norm });
    }
    Ok(p.unscale(norm))
}

/// `P_k q / ||P_k q||` for each source and `P q / ||P q||` for the second
/// hop, with projectors onto the selected principal eigenvectors.
pub fn estimate_channels(spectra: &ErrorSpectra, q: &CVector) -> Result<ChannelEstimates> {
    let f_hat = spectra
        .eig_f
        .iter()
        .zip(&spectra.n_f)
        .map(|(eig, &n)| project_normalized(eig, n, q))
        .collect::<Result<Vec<_>>>()?;
    let g_hat = project_normalized(&spectra.eig_g, spectra.n_g, q)?;
    Ok(ChannelEstimates { f_hat, g_hat })
}

/// How unit-norm estimates are scaled before the moments are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateScale {
    /// Use the unit-norm directions as they are.
    Unit,
    /// Scale each direction by the square root of [`signal_energy`] of its
    /// covariance estimate.
    SignalEnergy,
}

/// Channel energy held in the `n` principal components of a covariance
/// estimate: their eigenvalue sum minus `n` times the mean of the remaining
/// (noise) eigenvalues. The full trace when `n = M`.
pub fn signal_energy(r: &HermitianMatrix, n: usize) -> f64 {
    signal_energy_from_eigenvalues(&eig_hermitian(r).eigenvalues, n)
}

/// [`signal_energy`] from eigenvalues sorted in descending order.
pub fn signal_energy_from_eigenvalues(eigenvalues: &[f64], n: usize) -> f64 {
    let m = eigenvalues.len();
    let n = n.clamp(1, m.max(1));
    let energy = if n >= m {
        eigenvalues.iter().sum::<f64>()
    } else {
        let head: f64 = eigenvalues[..n].iter().sum();
        let floor = eigenvalues[n..].iter().sum::<f64>() / (m - n) as f64;
        head - n as f64 * floor
    };
    energy.max(f64::MIN_POSITIVE)
}

/// Estimates rescaled per `scale`, ready for [`assemble_moments`].
pub fn scaled_estimates(
    estimates: &ChannelEstimates,
    spectra: &ErrorSpectra,
    scale: EstimateScale,
) -> (Vec<CVector>, CVector) {
    let amplitude = |ev: &[f64], n: usize| C64::new(signal_energy_from_eigenvalues(ev, n).sqrt(), 0.0);
    match scale {
        EstimateScale::Unit => (estimates.f_hat.clone(), estimates.g_hat.clone()),
        EstimateScale::SignalEnergy => {
            let f = estimates
                .f_hat
                .iter()
                .zip(spectra.r_eigenvalues_f.iter().zip(&spectra.n_f))
                .map(|(v, (ev, &n))| v * amplitude(ev, n))
                .collect();
            let g = &estimates.g_hat * amplitude(&spectra.r_eigenvalues_g, spectra.n_g);
            (f, g)
        }
    }
}

/// `R^_k`, `Q^`, `D^` from channel estimates.
pub fn assemble_moments(
    f: &[CVector],
    g: &CVector,
    sources: &SourceConfig,
    noise_power: f64,
) -> Result<MomentSet> {
    moments_from_vectors(f, g, sources, noise_power)
}

#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    pub w: CVector,
    pub moments: MomentSet,
    /// `(P_n I + P_T U~)^-1 R~_1` with `X~ = D^-1/2 X D^-1/2`.
    pub theta: CMatrix,
    /// Largest eigenvalue of `theta`.
    pub lambda_max: f64,
    /// `P_T lambda_max`: the SINR the weights achieve on `moments`.
    pub sinr_max: f64,
    pub degenerate_top_eigenvalue: bool,
}

/// Maximizes `w^H R_1 w / (P_n + w^H U w)` subject to `w^H D w = P_T`.
///
/// With `w = sqrt(P_T) D^-1/2 v`, `||v|| = 1`, the objective becomes
/// `P_T v^H R~_1 v / v^H A v`, `A = P_n I + P_T U~`. The generalized
/// Hermitian problem is reduced through the Cholesky factor of `A`.
pub fn solve_weights(moments: &MomentSet, total_power: f64) -> Result<BeamformerSolution> {
    if !(total_power > 0.0) {
        return Err(Error::Domain(format!(
            "total relay power must be positive, got {total_power}"
        )));
    }
    if let Some(bad) = moments.d.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Domain(format!(
            "relay power diagonal entry {bad} is {}",
            moments.d[bad]
        )));
    }
    let m = moments.relays();
    let d_inv_sqrt: Vec<f64> = moments.d.iter().map(|d| 1.0 / d.sqrt()).collect();
    let whiten = |x: &CMatrix| {
        CMatrix::from_fn(m, m, |i, j| x[(i, j)] * (d_inv_sqrt[i] * d_inv_sqrt[j]))
    };
    let r1 = whiten(moments.r[0].as_matrix());
    let u = whiten(moments.interference_plus_noise().as_matrix());
    let a = CMatrix::identity(m, m) * C64::new(moments.noise_power, 0.0)
        + u * C64::new(total_power, 0.0);
    let a = HermitianMatrix::from_hermitian_part(&a)?.into_matrix();

    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::NotPositiveDefinite(format!(
            "P_n I + P_T U~ with P_n = {}",
            moments.noise_power
        ))
    })?;
    let l = chol.l();
    let left = l
        .solve_lower_triangular(&r1)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&left.adjoint())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let top = principal_of(&eig_hermitian(&HermitianMatrix::from_hermitian_part(&reduced)?));

    let mut v = l
        .adjoint()
        .solve_upper_triangular(&top.vector)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let norm = v.norm();
    v.unscale_mut(norm);
    fix_phase(&mut v);

    let scale = total_power.sqrt();
    let w = CVector::from_fn(m, |i, _| v[i] * (scale * d_inv_sqrt[i]));
    let lambda_max = top.value.max(0.0);
    Ok(BeamformerSolution {
        w,
        moments: moments.clone(),
        theta: chol.solve(&r1),
        lambda_max,
        sinr_max: total_power * lambda_max,
        degenerate_top_eigenvalue: top.degenerate,
    })
}

/// Weights from the exact moments of the true channels.
pub fn baseline_perfect_csi(exact: &MomentSet, total_power: f64) -> Result<BeamformerSolution> {
    solve_weights(exact, total_power)
}

/// Weights that treat the observed channels as exact.
pub fn baseline_non_robust(
    observed: &MismatchedChannels,
    sources: &SourceConfig,
    noise_power: f64,
    total_power: f64,
) -> Result<BeamformerSolution> {
    let moments = exact_moments(&observed.f_hat, &observed.g_hat, sources, noise_power)?;
    solve_weights(&moments, total_power)
}

/// Everything fixed for one Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub channels: TrueChannels,
    pub sources: SourceConfig,
    pub noise_power: f64,
    pub total_power: f64,
    /// Mismatch level of this trial's observations.
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct LrccConfig {
    pub mode: CsiMode,
    /// Upper end of the mismatch range assumed by the error spectra.
    pub eps_max: f64,
    pub selection: SelectionRule,
    pub scale: EstimateScale,
    pub snapshots: usize,
}

#[derive(Debug, Clone)]
pub struct LrccStep {
    pub iteration: usize,
    pub sinr_max: f64,
    /// SINR of this iteration's weights on the exact moments.
    pub true_sinr: f64,
    pub n_f: Vec<usize>,
    pub n_g: usize,
    /// Angle between each `f^_k` and the true `f_k`, radians.
    pub direction_error_f: Vec<f64>,
    pub direction_error_g: f64,
    /// The projection degenerated and the previous estimates were reused.
    pub fallback: bool,
    pub degenerate_top_eigenvalue: bool,
}

#[derive(Debug, Clone)]
pub struct LrccRun {
    pub steps: Vec<LrccStep>,
    pub final_solution: BeamformerSolution,
    /// Channel observation of every snapshot, in order.
    pub observations: Vec<MismatchedChannels>,
    /// Spectra of each iteration; identical in statistics mode.
    pub last_spectra: ErrorSpectra,
}

/// Angle between two vectors, insensitive to a common phase.
pub fn direction_error(estimate: &CVector, truth: &CVector) -> f64 {
    let denom = estimate.norm() * truth.norm();
    if denom == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (estimate.dotc(truth).norm() / denom).clamp(0.0, 1.0).acos()
}

/// Runs the recursion for `config.snapshots` snapshots.
///
/// Each snapshot draws a fresh observation of the channels at the trial's
/// mismatch level from `observation_rng` and one pass of the signal chain,
/// driven by the previous weights, from `signal_rng`. The weights start at
/// all ones.
pub fn run_lrcc<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    inputs: &TrialInputs,
    config: &LrccConfig,
    observation_rng: &mut R1,
    signal_rng: &mut R2,
) -> Result<LrccRun> {
    if config.snapshots == 0 {
        return Err(Error::Domain("at least one snapshot is required".into()));
    }
    let channels = &inputs.channels;
    let (m, k) = (channels.relays(), channels.sources());
    if inputs.sources.sources() != k {
        return Err(Error::Dimension(format!(
            "{k} channel columns for {} sources",
            inputs.sources.sources()
        )));
    }
    let truth = exact_moments(&channels.f, &channels.g, &inputs.sources, inputs.noise_power)?;
    let true_f: Vec<CVector> = (0..k).map(|c| channels.f_col(c)).collect();

    let mut state = match config.mode {
        CsiMode::Instantaneous => EstimatorState::new_instantaneous(m, k),
        CsiMode::Statistics => EstimatorState::new_statistics(
            true_f.iter().map(HermitianMatrix::outer).collect(),
            HermitianMatrix::outer(&channels.g),
        )?,
    };
    let fixed_spectra = match config.mode {
        CsiMode::Statistics => Some(build_error_spectra(
            state.r_f(),
            state.r_g(),
            config.eps_max,
            &config.selection,
        )?),
        CsiMode::Instantaneous => None,
    };

    let mut w = CVector::from_element(m, C64::new(1.0, 0.0));
    let mut previous: Option<ChannelEstimates> = None;
    let mut steps = Vec::with_capacity(config.snapshots);
    let mut observations = Vec::with_capacity(config.snapshots);
    let mut last = None;

    for _ in 0..config.snapshots {
        let observation = observe(observation_rng, channels, inputs.epsilon);
        let snap = generate_snapshot(
            signal_rng,
            &channels.f,
            &channels.g,
            &inputs.sources,
            &w,
            inputs.noise_power,
        );
        state.update_scv(&snap.x, snap.z);
        if config.mode == CsiMode::Instantaneous {
            let f_obs: Vec<CVector> = (0..k).map(|c| observation.f_hat_col(c)).collect();
            state.update_channel_covariances(&f_obs, &observation.g_hat)?;
        }

        let spectra = match &fixed_spectra {
            Some(s) => s.clone(),
            None => build_error_spectra(state.r_f(), state.r_g(), config.eps_max, &config.selection)?,
        };
        let (estimates, fallback) = match estimate_channels(&spectra, state.q()) {
            Ok(e) => (e, false),
            Err(Error::DegenerateProjection { .. }) => {
                let reuse = previous.clone().unwrap_or_else(|| {
                    let unit = CVector::from_element(m, C64::new(1.0 / (m as f64).sqrt(), 0.0));
                    ChannelEstimates {
                        f_hat: vec![unit.clone(); k],
                        g_hat: unit,
                    }
                });
                (reuse, true)
            }
            Err(e) => return Err(e),
        };
        let (f_scaled, g_scaled) =
            scaled_estimates(&estimates, &spectra, config.scale);
        let moments = assemble_moments(&f_scaled, &g_scaled, &inputs.sources, inputs.noise_power)?;
        let solution = solve_weights(&moments, inputs.total_power)?;

        steps.push(LrccStep {
            iteration: state.iteration(),
            sinr_max: solution.sinr_max,
            true_sinr: output_sinr(&solution.w, &truth),
            n_f: spectra.n_f.clone(),
            n_g: spectra.n_g,
            direction_error_f: estimates
                .f_hat
                .iter()
                .zip(&true_f)
                .map(|(e, t)| direction_error(e, t))
                .collect(),
            direction_error_g: direction_error(&estimates.g_hat, &channels.g),
            fallback,
            degenerate_top_eigenvalue: solution.degenerate_top_eigenvalue,
        });
        w = solution.w.clone();
        previous = Some(estimates);
        observations.push(observation);
        last = Some((solution, spectra));
    }

    let (final_solution, last_spectra) = last.expect("at least one snapshot was processed");
    Ok(LrccRun {
        steps,
        final_solution,
        observations,
        last_spectra,
    })
}
