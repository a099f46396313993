//! Property tests for the invariants of every module.

mod common;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::Rng;

use common::{random_hermitian, random_instance, random_psd, random_unit, rng, simpson};
use relaybf::analysis::{
    covariance_with_spectrum, eigenpair_residual, mmse_of_output, mse_additive, mse_bounds, mse_subspace,
    random_unitary, spectrum_with_spread, tau_threshold, EigenSpreadSpec,
};
use relaybf::channel::{
    max_abs_diff, perturb_covariance, relay_destination_distance, sample_geometry, LargeScaleGains,
    PropagationParams,
};
use relaybf::estimator::{
    build_error_spectra, error_spectrum, estimate_channels, solve_weights, EstimatorState, SelectionRule,
};
use relaybf::random::complex_normal_vector;
use relaybf::signals::{generate_snapshot, output_sinr, relay_power};
use relaybf::spectral::{eig_hermitian, select_principal_count, HermitianMatrix};
use relaybf::{CMatrix, CVector, C64};

/// Fixed seed so every run explores the same cases; set `PROPTEST_RNG_SEED`
/// to explore others.
fn config(cases: u32) -> ProptestConfig {
    let rng_seed = match std::env::var("PROPTEST_RNG_SEED").ok().and_then(|s| s.parse().ok()) {
        Some(seed) => RngSeed::Fixed(seed),
        None => RngSeed::Fixed(0x5eed),
    };
    ProptestConfig {
        cases,
        rng_seed,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Direct scan over every count `n = 1..=M`: the smallest `n` whose leading
/// eigenvalues reach the variance target, capped by the number of
/// eigenvalues above both the threshold and the mean.
fn scan_principal_count(eigenvalues: &[f64], threshold: f64, fraction: f64) -> usize {
    let mut ev = eigenvalues.to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ev.iter().sum();
    let mean = total / ev.len() as f64;
    let variance_count = (1..=ev.len())
        .find(|&n| ev[..n].iter().sum::<f64>() >= fraction * total * (1.0 - 1e-12))
        .unwrap();
    let candidates = ev.iter().filter(|&&l| l > threshold && l > mean).count();
    if candidates >= 1 {
        variance_count.min(candidates)
    } else {
        variance_count
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn solver_meets_power_and_eigenpair_contract(seed in any::<u64>(), m in 2usize..12, k in 1usize..5) {
        let inst = random_instance(&mut rng(seed), m, k);
        let sol = solve_weights(&inst.moments, inst.total_power).unwrap();
        let power = relay_power(&sol.w, &inst.moments.d);
        prop_assert!((power - inst.total_power).abs() <= 1e-9 * inst.total_power);
        let residual = eigenpair_residual(&sol.w, &inst.moments.d, &sol.theta, sol.lambda_max).unwrap();
        prop_assert!(residual <= 1e-8, "residual {residual}");
        let realized = output_sinr(&sol.w, &inst.moments);
        prop_assert!((realized - sol.sinr_max).abs() <= 1e-9 * sol.sinr_max.max(1.0));
    }

    #[test]
    fn eig_reconstructs_random_hermitian(seed in any::<u64>(), m in 1usize..12) {
        let a = random_hermitian(&mut rng(seed), m);
        let eig = eig_hermitian(&a);
        prop_assert!((eig.reconstruct() - a.as_matrix()).norm() <= 1e-9);
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        prop_assert!((gram - CMatrix::identity(m, m)).norm() <= 1e-10);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn known_spectrum_is_recovered(seed in any::<u64>(), ev in prop::collection::vec(-5.0..5.0f64, 1..10)) {
        let mut r = rng(seed);
        let v = random_unitary(&mut r, ev.len());
        let mut scaled = v.clone();
        for (j, &l) in ev.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        let a = HermitianMatrix::from_hermitian_part(&(scaled * v.adjoint())).unwrap();
        let mut expected = ev.clone();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in eig_hermitian(&a).eigenvalues.iter().zip(&expected) {
            prop_assert!((got - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn projectors_are_idempotent(seed in any::<u64>(), m in 1usize..10, n in 1usize..10) {
        let mut r = rng(seed);
        let p = eig_hermitian(&random_hermitian(&mut r, m)).principal_projector(n);
        let v = complex_normal_vector(&mut r, m, 1.0);
        let pv = p.apply(&v);
        prop_assert!((p.apply(&pv) - &pv).norm() <= 1e-9 * v.norm());
        prop_assert!((p.matrix().trace().re - n.min(m) as f64).abs() <= 1e-9);
    }

    #[test]
    fn rayleigh_quotient_never_exceeds_top_eigenvalue(seed in any::<u64>(), m in 1usize..10) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, m);
        let top = eig_hermitian(&a).eigenvalues[0];
        for _ in 0..1000 {
            let u = random_unit(&mut r, m);
            prop_assert!(a.quadratic_form(&u) <= top + 1e-9);
        }
    }

    #[test]
    fn principal_count_matches_exhaustive_scan(
        ev in prop::collection::vec(0.01..10.0f64, 1..12),
        threshold in 0.0..3.0f64,
        fraction in 0.5..0.99f64,
    ) {
        let n = select_principal_count(&ev, threshold, fraction).unwrap();
        prop_assert!(n >= 1 && n <= ev.len());
        prop_assert_eq!(n, scan_principal_count(&ev, threshold, fraction));
    }

    #[test]
    fn perturbed_covariance_is_positive_definite(seed in any::<u64>(), m in 1usize..10, eps in 1e-3..1.0f64) {
        let r = random_psd(&mut rng(seed), m);
        let out = perturb_covariance(&r, eps);
        let min = *eig_hermitian(&out.matrix).eigenvalues.last().unwrap();
        prop_assert!(min > 0.0);
        prop_assert!(min >= eps * r.frobenius_norm() * (1.0 - 1e-9));
    }

    #[test]
    fn geometry_and_gains_replay(seed in any::<u64>(), m in 1usize..16) {
        let draw = || {
            let mut r = rng(seed);
            let geo = sample_geometry(&mut r, m);
            let gains = LargeScaleGains::sample(&mut r, &geo, PropagationParams::default()).unwrap();
            (geo, gains)
        };
        let (geo, gains) = draw();
        prop_assert_eq!((geo.clone(), gains), draw());
        for i in 0..m {
            let d = relay_destination_distance(geo.source_relay[i], geo.angles[i]);
            prop_assert_eq!(d, geo.relay_destination[i]);
        }
    }

    #[test]
    fn snapshot_chain_is_consistent(seed in any::<u64>(), m in 1usize..10) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, m, 3);
        let w = complex_normal_vector(&mut r, m, 1.0);
        let snap = generate_snapshot(&mut r, &inst.f, &inst.g, &inst.sources, &w, inst.noise_power);
        let x = &inst.f * &snap.s + &snap.relay_noise;
        let z = inst.g.dot(&w.conjugate().component_mul(&x)) + snap.destination_noise;
        prop_assert_eq!(x, snap.x);
        prop_assert_eq!(z, snap.z);
    }

    #[test]
    fn scv_and_covariance_recursions_equal_batch_means(seed in any::<u64>(), m in 1usize..8, steps in 1usize..60) {
        let mut r = rng(seed);
        let mut state = EstimatorState::new_instantaneous(m, 2);
        let mut sum_q = CVector::zeros(m);
        let mut sum_f = vec![CMatrix::zeros(m, m); 2];
        let mut sum_g = CMatrix::zeros(m, m);
        for i in 1..=steps {
            let x = complex_normal_vector(&mut r, m, 1.0);
            let z = C64::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let f: Vec<CVector> = (0..2).map(|_| complex_normal_vector(&mut r, m, 1.0)).collect();
            let g = complex_normal_vector(&mut r, m, 1.0);
            state.update_scv(&x, z);
            state.update_channel_covariances(&f, &g).unwrap();
            sum_q += &x * z.conj();
            for (s, fk) in sum_f.iter_mut().zip(&f) {
                *s += fk * fk.adjoint();
            }
            sum_g += &g * g.adjoint();
            let inv = C64::new(1.0 / i as f64, 0.0);
            prop_assert!((state.q() - &sum_q * inv).norm() <= 1e-12 * (sum_q.norm() / i as f64).max(1.0));
            for (est, s) in state.r_f().iter().zip(&sum_f) {
                prop_assert!(max_abs_diff(est.as_matrix(), &(s * inv)) <= 1e-12);
            }
            prop_assert!(max_abs_diff(state.r_g().as_matrix(), &(&sum_g * inv)) <= 1e-12);
        }
    }

    #[test]
    fn error_spectrum_matches_quadrature(seed in any::<u64>(), m in 1usize..10, eps_max in 0.01..1.0f64) {
        let r = random_psd(&mut rng(seed), m);
        let norm = r.frobenius_norm();
        let integrand = |eps: f64| r.add_identity(eps * norm).into_matrix();
        let numeric = simpson(integrand, 0.0, eps_max, 64);
        prop_assert!(max_abs_diff(error_spectrum(&r, eps_max).as_matrix(), &numeric) <= 1e-9);
    }

    #[test]
    fn estimates_are_unit_and_in_their_subspaces(seed in any::<u64>(), eps_max in 0.05..1.0f64) {
        let mut r = rng(seed);
        let r_f: Vec<HermitianMatrix> = (0..3).map(|_| random_psd(&mut r, 8)).collect();
        let r_g = random_psd(&mut r, 8);
        let q = complex_normal_vector(&mut r, 8, 1.0);
        let spectra = build_error_spectra(&r_f, &r_g, eps_max, &SelectionRule::new(0.1)).unwrap();
        let est = estimate_channels(&spectra, &q).unwrap();
        let pairs = est.f_hat.iter().zip(spectra.eig_f.iter().zip(&spectra.n_f))
            .chain(std::iter::once((&est.g_hat, (&spectra.eig_g, &spectra.n_g))));
        for (v, (eig, &n)) in pairs {
            prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
            let p = eig.principal_projector(n);
            prop_assert!((v - p.apply(v)).norm() <= 1e-10);
        }
    }

    #[test]
    fn mse_additive_is_bracketed(
        seed in any::<u64>(),
        lambda_max in 0.1..10.0f64,
        ratio in 0.0..=1.0f64,
        eps_max in 0.01..1.0f64,
        m in 2usize..12,
    ) {
        let mut r = rng(seed);
        let spec = EigenSpreadSpec::new(lambda_max, ratio * lambda_max, m).unwrap();
        let b = mse_bounds(&spec, eps_max);
        let spectrum = spectrum_with_spread(&mut r, &spec);
        let cov = covariance_with_spectrum(&mut r, &spectrum);
        let mse = mse_additive(&cov, eps_max);
        prop_assert!(mse >= b.lower - 1e-9 && mse <= b.upper + 1e-9, "{} not in [{}, {}]", mse, b.lower, b.upper);
    }

    #[test]
    fn zero_spread_collapses_bounds(lambda_max in 1e-3..100.0f64, eps_max in 1e-3..1.0f64, m in 2usize..32) {
        let b = mse_bounds(&EigenSpreadSpec::new(lambda_max, 0.0, m).unwrap(), eps_max);
        prop_assert_eq!(b.lower, b.upper);
    }

    #[test]
    fn subspace_mse_beats_additive_below_threshold(
        lambda_max in 0.5..10.0f64,
        noise_power in 0.01..1.0f64,
        eps_max in 0.05..1.0f64,
        fraction in 0.0..0.999f64,
    ) {
        let m = 8;
        let threshold = tau_threshold(lambda_max, m, 1.0, noise_power, eps_max);
        prop_assume!(threshold > 0.0);
        let tau = fraction * threshold;
        let r_top = (m as f64).sqrt() * lambda_max;
        let additive = mse_additive(&HermitianMatrix::identity(m).scale(lambda_max), eps_max);
        for j in 1..=100 {
            let r_norm = r_top * j as f64 / 100.0;
            prop_assert!(mse_subspace(r_norm, 1.0, noise_power, eps_max, tau) < additive);
        }
    }

    #[test]
    fn mmse_is_strictly_decreasing(sinr in 0.0..1e6f64, step in 1e-6..1e3f64) {
        prop_assert!(mmse_of_output(sinr + step) < mmse_of_output(sinr));
    }
}
