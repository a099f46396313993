//! Independent oracles: Monte Carlo power measurements, a second
//! eigen-solver path, and seeded trend checks.

mod common;

use rand::Rng;

use common::{random_instance, rng};
use relaybf::analysis::rayleigh_quotient_lambda;
use relaybf::channel::{observe, sample_geometry, sample_true_channels, LargeScaleGains, PropagationParams};
use relaybf::estimator::{run_lrcc, solve_weights, EstimateScale, LrccConfig, SelectionRule};
use relaybf::harness::experiments::{draw_trial_inputs, trial_streams, Point};
use relaybf::harness::{run_experiment, Experiment, ScenarioConfig};
use relaybf::random::complex_normal_vector;
use relaybf::signals::{exact_moments, generate_snapshot, output_sinr, relay_power, SourceConfig};
use relaybf::spectral::{eig_hermitian, HermitianMatrix};
use relaybf::{CMatrix, C64};

const SNAPSHOTS: usize = 100_000;

#[test]
fn output_sinr_and_relay_power_match_generated_snapshots() {
    let mut r = rng(11);
    let geo = sample_geometry(&mut r, 8);
    let gains = LargeScaleGains::sample(&mut r, &geo, PropagationParams::default()).unwrap();
    let ch = sample_true_channels(&mut r, &gains, 3);
    let sources = SourceConfig::new(vec![1.0, 0.5, 0.5]).unwrap();
    let noise_power = 0.1;
    let moments = exact_moments(&ch.f, &ch.g, &sources, noise_power).unwrap();
    let w = complex_normal_vector(&mut r, 8, 1.0);
    let desired_gain = ch.g.dot(&w.conjugate().component_mul(&ch.f.column(0)));

    let (mut signal, mut rest, mut power) = (0.0, 0.0, 0.0);
    for _ in 0..SNAPSHOTS {
        let snap = generate_snapshot(&mut r, &ch.f, &ch.g, &sources, &w, noise_power);
        let desired = desired_gain * snap.s[0];
        signal += desired.norm_sqr();
        rest += (snap.z - desired).norm_sqr();
        power += snap.y.norm_squared();
    }
    let empirical_sinr = signal / rest;
    let analytic_sinr = output_sinr(&w, &moments);
    assert!(
        (empirical_sinr / analytic_sinr - 1.0).abs() < 0.02,
        "empirical {empirical_sinr} vs analytic {analytic_sinr}"
    );
    let empirical_power = power / SNAPSHOTS as f64;
    let analytic_power = relay_power(&w, &moments.d);
    assert!(
        (empirical_power / analytic_power - 1.0).abs() < 0.02,
        "empirical {empirical_power} vs analytic {analytic_power}"
    );
}

#[test]
fn mismatch_errors_are_uncorrelated_with_channels() {
    let mut r = rng(12);
    let geo = sample_geometry(&mut r, 4);
    let gains = LargeScaleGains::sample(&mut r, &geo, PropagationParams::default()).unwrap();
    let (mut cross_f, mut cross_g, mut ef, mut eg, mut ff, mut gg) =
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0, 0.0, 0.0);
    for _ in 0..SNAPSHOTS {
        let ch = sample_true_channels(&mut r, &gains, 2);
        let eps = r.random_range(0.01..0.5);
        let obs = observe(&mut r, &ch, eps);
        cross_f += obs.e_f[(1, 0)] * ch.f[(1, 0)].conj();
        cross_g += obs.e_g[2] * ch.g[2].conj();
        ef += obs.e_f[(1, 0)].norm_sqr();
        eg += obs.e_g[2].norm_sqr();
        ff += ch.f[(1, 0)].norm_sqr();
        gg += ch.g[2].norm_sqr();
    }
    let limit = 5.0 / (SNAPSHOTS as f64).sqrt();
    assert!(cross_f.norm() / (ef * ff).sqrt() < limit);
    assert!(cross_g.norm() / (eg * gg).sqrt() < limit);
}

/// Top eigenvalue of the whitened pencil through `A^-1/2` built from a
/// Hermitian eigendecomposition of `A`, independent of the solver's
/// Cholesky path.
fn pencil_top_eigenvalue(inst: &common::Instance) -> f64 {
    let m = inst.moments.relays();
    let s: Vec<f64> = inst.moments.d.iter().map(|d| 1.0 / d.sqrt()).collect();
    let whiten = |x: &CMatrix| CMatrix::from_fn(m, m, |i, j| x[(i, j)] * (s[i] * s[j]));
    let r1 = whiten(inst.moments.r[0].as_matrix());
    let u = whiten(inst.moments.interference_plus_noise().as_matrix());
    let a = CMatrix::identity(m, m) * C64::new(inst.noise_power, 0.0) + u * C64::new(inst.total_power, 0.0);
    let eig = eig_hermitian(&HermitianMatrix::from_hermitian_part(&a).unwrap());
    let mut half = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        half.column_mut(j).scale_mut(1.0 / l.sqrt());
    }
    let inv_sqrt = &half * eig.eigenvectors.adjoint();
    let b = &inv_sqrt * r1 * &inv_sqrt;
    eig_hermitian(&HermitianMatrix::from_hermitian_part(&b).unwrap()).eigenvalues[0]
}

#[test]
fn rayleigh_quotient_matches_an_independent_eigenvalue() {
    let mut r = rng(13);
    for _ in 0..50 {
        let inst = random_instance(&mut r, 8, 3);
        let sol = solve_weights(&inst.moments, inst.total_power).unwrap();
        let oracle = pencil_top_eigenvalue(&inst);
        let rq = rayleigh_quotient_lambda(&sol.w, &inst.moments.d, &sol.theta).unwrap();
        assert!((rq - oracle).abs() <= 1e-8 * oracle.max(1.0), "{rq} vs {oracle}");
        assert!((sol.lambda_max - oracle).abs() <= 1e-8 * oracle.max(1.0));
    }
}

#[test]
fn direction_error_shrinks_with_averaging() {
    let cfg = ScenarioConfig {
        eps_max: relaybf::harness::Param::Fixed(0.2),
        ..ScenarioConfig::default()
    };
    let point = Point {
        eps_max: 0.2,
        pt_dbw: cfg.pt_dbw.first(),
        snr_db: 10.0,
    };
    let (mut early, mut late) = (0.0, 0.0);
    let trials = 200;
    for t in 0..trials {
        let mut streams = trial_streams(cfg.seed, t);
        let inputs = draw_trial_inputs(&cfg, &point, &mut streams.setup).unwrap();
        let lrcc = LrccConfig {
            mode: cfg.mode,
            eps_max: 0.2,
            selection: SelectionRule::new(inputs.noise_power),
            scale: EstimateScale::SignalEnergy,
            snapshots: 100,
        };
        let run = run_lrcc(&inputs, &lrcc, &mut streams.observation, &mut streams.signal).unwrap();
        early += run.steps[4].direction_error_f[0];
        late += run.steps[99].direction_error_f[0];
    }
    let (early, late) = (early / trials as f64, late / trials as f64);
    assert!(late <= early, "mean direction error {late} at snapshot 100 vs {early} at snapshot 5");
}

#[test]
fn csv_is_identical_across_thread_pools() {
    let cfg = ScenarioConfig {
        trials: 12,
        snapshots: 20,
        ..Experiment::PtSweep.default_config()
    };
    let csv_in = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(Experiment::PtSweep, &cfg).unwrap().to_csv())
    };
    let reference = run_experiment(Experiment::PtSweep, &cfg).unwrap().to_csv();
    assert_eq!(csv_in(1), reference);
    assert_eq!(csv_in(3), reference);
}
