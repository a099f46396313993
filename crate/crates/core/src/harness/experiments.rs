//! Experiment definitions and the Monte Carlo driver.
//!
//! Trial `t` of every sweep point draws from the seed
//! `trial_seed(seed, t)`. Three independent ChaCha8 streams are derived from
//! it: stream 0 for geometry, large-scale gains, channels and the mismatch
//! level, stream 1 for the per-snapshot channel observations and stream 2
//! for symbols and noise. Every sweep point and every method therefore sees
//! the same realizations. Trials run in parallel and are reduced in
//! trial-index order, so results do not depend on scheduling.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Method, Param, ScenarioConfig, SweepAxis};
use super::output::{ComplexityRow, MseBoundsRow, ResultRow, Table};
use crate::analysis::{covariance_with_spectrum, empirical_additive_mse, mse_bounds, spectrum_with_spread, EigenSpreadSpec};
use crate::channel::{draw_epsilon, observe, sample_geometry, sample_true_channels, LargeScaleGains, PropagationParams};
use crate::estimator::{
    baseline_non_robust, baseline_perfect_csi, run_lrcc, solve_weights, EstimateScale, LrccConfig, SelectionRule,
    TrialInputs,
};
use crate::random::{complex_normal_matrix, trial_seed};
use crate::signals::{exact_moments, noise_power_for_snr, output_sinr, SourceConfig};
use crate::{db_to_linear, linear_to_db, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    EpsSweep,
    PtSweep,
    Incoherent,
    SnapshotTrace,
    PcSelection,
    MseBounds,
    Complexity,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::EpsSweep,
        Experiment::PtSweep,
        Experiment::Incoherent,
        Experiment::SnapshotTrace,
        Experiment::PcSelection,
        Experiment::MseBounds,
        Experiment::Complexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::EpsSweep => "eps-sweep",
            Experiment::PtSweep => "pt-sweep",
            Experiment::Incoherent => "incoherent",
            Experiment::SnapshotTrace => "snapshot-trace",
            Experiment::PcSelection => "pc-selection",
            Experiment::MseBounds => "mse-bounds",
            Experiment::Complexity => "complexity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// One-line description of what the experiment measures.
    pub fn analogue(self) -> &'static str {
        match self {
            Experiment::EpsSweep => "output SINR vs eps_max (0.1..1.0), SNR 10 dB, P_T 1 dBW",
            Experiment::PtSweep => "output SINR vs P_T (1..5 dBW), eps_max 0.5",
            Experiment::Incoherent => "output SINR vs SNR, INR 20 dB, interferer ratio 10, eps_max 0.2",
            Experiment::SnapshotTrace => "output SINR vs snapshot index at SNR 10 dB, incoherent scenario",
            Experiment::PcSelection => "output SINR vs forced number of principal components",
            Experiment::MseBounds => "MSE bounds and empirical MSE vs lambda_max",
            Experiment::Complexity => "median weight-solve time vs M",
        }
    }

    /// Default settings; a config file is applied on top of these.
    pub fn default_config(self) -> ScenarioConfig {
        let base = ScenarioConfig::default();
        match self {
            Experiment::EpsSweep => ScenarioConfig {
                eps_max: Param::Sweep((1..=10).map(|i| i as f64 / 10.0).collect()),
                ..base
            },
            Experiment::PtSweep => ScenarioConfig {
                pt_dbw: Param::Sweep((1..=5).map(f64::from).collect()),
                ..base
            },
            Experiment::Incoherent => ScenarioConfig {
                snr_db: Param::Sweep(vec![0.0, 5.0, 10.0, 15.0, 20.0]),
                inr_db: 20.0,
                interferer_power_ratio: 10.0,
                eps_max: Param::Fixed(0.2),
                ..base
            },
            Experiment::SnapshotTrace => ScenarioConfig {
                inr_db: 20.0,
                interferer_power_ratio: 10.0,
                eps_max: Param::Fixed(0.2),
                ..base
            },
            Experiment::PcSelection => base,
            Experiment::MseBounds => ScenarioConfig {
                eps_max: Param::Fixed(0.2),
                ..base
            },
            Experiment::Complexity => ScenarioConfig {
                trials: COMPLEXITY_REPETITIONS,
                ..base
            },
        }
    }

    fn default_axis(self) -> Option<SweepAxis> {
        match self {
            Experiment::EpsSweep => Some(SweepAxis::EpsMax),
            Experiment::PtSweep => Some(SweepAxis::PtDbw),
            Experiment::Incoherent => Some(SweepAxis::SnrDb),
            _ => None,
        }
    }
}

/// Relay counts of the complexity probe.
pub const COMPLEXITY_SIZES: [usize; 5] = [8, 16, 32, 64, 128];
pub const COMPLEXITY_REPETITIONS: usize = 25;
/// Monte Carlo draws per point of the empirical MSE curve.
pub const MSE_EMPIRICAL_DRAWS: usize = 20_000;
pub const MSE_SPREAD_RATIOS: [f64; 3] = [0.9, 0.5, 0.0];

/// Scalar settings of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub eps_max: f64,
    pub pt_dbw: f64,
    pub snr_db: f64,
}

impl Point {
    fn of(cfg: &ScenarioConfig) -> Self {
        Self {
            eps_max: cfg.eps_max.first(),
            pt_dbw: cfg.pt_dbw.first(),
            snr_db: cfg.snr_db.first(),
        }
    }

    fn with(mut self, axis: SweepAxis, value: f64) -> Self {
        match axis {
            SweepAxis::EpsMax => self.eps_max = value,
            SweepAxis::PtDbw => self.pt_dbw = value,
            SweepAxis::SnrDb => self.snr_db = value,
        }
        self
    }
}

/// The three RNG streams of a trial.
pub struct TrialStreams {
    pub setup: ChaCha8Rng,
    pub observation: ChaCha8Rng,
    pub signal: ChaCha8Rng,
}

pub fn trial_streams(seed: u64, trial: u64) -> TrialStreams {
    let base = trial_seed(seed, trial);
    let stream = |id: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(base);
        rng.set_stream(id);
        rng
    };
    TrialStreams {
        setup: stream(0),
        observation: stream(1),
        signal: stream(2),
    }
}

/// Draws the realization of one trial at one sweep point.
pub fn draw_trial_inputs(cfg: &ScenarioConfig, point: &Point, setup: &mut ChaCha8Rng) -> Result<TrialInputs> {
    let params = PropagationParams {
        l_linear: db_to_linear(cfg.l_db),
        rho: cfg.rho,
        sigma_s_db: cfg.sigma_s_db,
    };
    let geometry = sample_geometry(setup, cfg.m);
    let gains = LargeScaleGains::sample(setup, &geometry, params)?;
    let channels = sample_true_channels(setup, &gains, cfg.k);
    let epsilon = draw_epsilon(setup, point.eps_max);
    let budget = noise_power_for_snr(point.snr_db, cfg.inr_db, 1.0, cfg.k - 1, cfg.interferer_power_ratio)?;
    let mut powers = vec![1.0];
    powers.extend(budget.interferer_powers);
    Ok(TrialInputs {
        channels,
        sources: SourceConfig::new(powers)?,
        noise_power: budget.noise_power,
        total_power: db_to_linear(point.pt_dbw),
        epsilon,
    })
}

/// Per-method results of one trial; `None` for disabled methods.
#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    /// `(true SINR, sinr_max)` in linear units.
    pub lrcc: Option<(f64, f64)>,
    pub perfect_csi: Option<(f64, f64)>,
    pub non_robust: Option<(f64, f64)>,
    /// True SINR of LRCC after each snapshot.
    pub lrcc_trace: Vec<f64>,
    /// True SINR of the non-robust weights built from each snapshot's
    /// observation (only when requested).
    pub non_robust_trace: Vec<f64>,
    /// Principal count of the desired source's spectrum at the last snapshot.
    pub final_n_desired: Option<usize>,
}

impl TrialOutcome {
    pub fn get(&self, method: Method) -> Option<(f64, f64)> {
        match method {
            Method::Lrcc => self.lrcc,
            Method::PerfectCsi => self.perfect_csi,
            Method::NonRobust => self.non_robust,
        }
    }
}

/// Runs the enabled methods on trial `trial` at `point`.
pub fn run_trial(
    cfg: &ScenarioConfig,
    point: &Point,
    trial: u64,
    forced_count: Option<usize>,
    trace_non_robust: bool,
) -> Result<TrialOutcome> {
    let mut streams = trial_streams(cfg.seed, trial);
    let inputs = draw_trial_inputs(cfg, point, &mut streams.setup)?;
    let ch = &inputs.channels;
    let truth = exact_moments(&ch.f, &ch.g, &inputs.sources, inputs.noise_power)?;
    let mut out = TrialOutcome::default();

    if cfg.has_method(Method::PerfectCsi) {
        let sol = baseline_perfect_csi(&truth, inputs.total_power)?;
        out.perfect_csi = Some((output_sinr(&sol.w, &truth), sol.sinr_max));
    }

    let observations = if cfg.has_method(Method::Lrcc) {
        let lrcc_cfg = LrccConfig {
            mode: cfg.mode,
            eps_max: point.eps_max,
            selection: SelectionRule {
                forced: forced_count,
                ..SelectionRule::new(inputs.noise_power)
            },
            scale: EstimateScale::SignalEnergy,
            snapshots: cfg.snapshots,
        };
        let run = run_lrcc(&inputs, &lrcc_cfg, &mut streams.observation, &mut streams.signal)?;
        let last = run.steps.last().expect("snapshots >= 1");
        out.lrcc = Some((last.true_sinr, last.sinr_max));
        out.lrcc_trace = run.steps.iter().map(|s| s.true_sinr).collect();
        out.final_n_desired = last.n_f.first().copied();
        run.observations
    } else {
        (0..cfg.snapshots)
            .map(|_| observe(&mut streams.observation, ch, inputs.epsilon))
            .collect()
    };

    if cfg.has_method(Method::NonRobust) {
        let non_robust = |obs| -> Result<(f64, f64)> {
            let sol = baseline_non_robust(obs, &inputs.sources, inputs.noise_power, inputs.total_power)?;
            Ok((output_sinr(&sol.w, &truth), sol.sinr_max))
        };
        out.non_robust = Some(non_robust(observations.last().expect("snapshots >= 1"))?);
        if trace_non_robust {
            out.non_robust_trace = observations
                .iter()
                .map(|o| non_robust(o).map(|(s, _)| s))
                .collect::<Result<_>>()?;
        }
    }
    Ok(out)
}

fn run_trials(
    cfg: &ScenarioConfig,
    point: &Point,
    forced_count: Option<usize>,
    trace_non_robust: bool,
) -> Result<Vec<TrialOutcome>> {
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, point, t, forced_count, trace_non_robust))
        .collect()
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `10 log10` of the mean linear value, with the standard error of the
/// mean carried to dB by the first-order (delta-method) approximation.
pub fn mean_db_and_stderr(values: &[f64]) -> (f64, f64) {
    let (mean, stderr) = mean_and_stderr(values);
    (linear_to_db(mean), 10.0 / std::f64::consts::LN_10 * stderr / mean)
}

fn summarize(sweep_name: &str, sweep_value: f64, method: &str, pairs: &[(f64, f64)]) -> ResultRow {
    let sinr: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sinr_max: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean, stderr) = mean_db_and_stderr(&sinr);
    ResultRow {
        sweep_name: sweep_name.to_string(),
        sweep_value,
        method: method.to_string(),
        mean_sinr_db: mean,
        stderr_db: stderr,
        mean_sinr_max_db: mean_db_and_stderr(&sinr_max).0,
        trials: pairs.len(),
    }
}

fn method_rows(cfg: &ScenarioConfig, sweep_name: &str, value: f64, outcomes: &[TrialOutcome]) -> Vec<ResultRow> {
    cfg.methods
        .iter()
        .map(|&m| {
            let pairs: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.get(m)).collect();
            summarize(sweep_name, value, m.name(), &pairs)
        })
        .collect()
}

fn reject_sweep(exp: Experiment, cfg: &ScenarioConfig) -> Result<()> {
    match cfg.sweep_axis() {
        Some(axis) => Err(Error::Config(vec![format!(
            "{}: experiment `{}` does not take a sweep",
            axis.name(),
            exp.name()
        )])),
        None => Ok(()),
    }
}

/// Runs `exp` with `cfg` (usually `exp.default_config()` with overrides).
pub fn run_experiment(exp: Experiment, cfg: &ScenarioConfig) -> Result<Table> {
    cfg.validate()?;
    match exp {
        Experiment::EpsSweep | Experiment::PtSweep | Experiment::Incoherent => run_sweep(exp, cfg),
        Experiment::SnapshotTrace => {
            reject_sweep(exp, cfg)?;
            run_snapshot_trace(cfg)
        }
        Experiment::PcSelection => {
            reject_sweep(exp, cfg)?;
            run_pc_selection(cfg)
        }
        Experiment::MseBounds => {
            reject_sweep(exp, cfg)?;
            run_mse_bounds_figure(cfg)
        }
        Experiment::Complexity => Ok(run_complexity_probe(&COMPLEXITY_SIZES, cfg.trials.max(1), cfg.seed)),
    }
}

fn run_sweep(exp: Experiment, cfg: &ScenarioConfig) -> Result<Table> {
    let axis = cfg
        .sweep_axis()
        .or(exp.default_axis())
        .expect("sweep experiments have a default axis");
    let base = Point::of(cfg);
    let mut rows = Vec::new();
    for value in cfg.param(axis).values() {
        let outcomes = run_trials(cfg, &base.with(axis, value), None, false)?;
        rows.extend(method_rows(cfg, axis.name(), value, &outcomes));
    }
    Ok(Table::Sinr(rows))
}

fn run_snapshot_trace(cfg: &ScenarioConfig) -> Result<Table> {
    let outcomes = run_trials(cfg, &Point::of(cfg), None, true)?;
    let mut rows = Vec::new();
    for i in 0..cfg.snapshots {
        for &m in &cfg.methods {
            let pairs: Vec<(f64, f64)> = outcomes
                .iter()
                .filter_map(|o| match m {
                    Method::Lrcc => o.lrcc_trace.get(i).map(|&s| (s, s)),
                    Method::NonRobust => o.non_robust_trace.get(i).map(|&s| (s, s)),
                    Method::PerfectCsi => o.perfect_csi,
                })
                .collect();
            let mut row = summarize("snapshot", (i + 1) as f64, m.name(), &pairs);
            if m == Method::Lrcc || m == Method::NonRobust {
                // sinr_max is only tracked for the final snapshot.
                row.mean_sinr_max_db = f64::NAN;
            }
            rows.push(row);
        }
    }
    Ok(Table::Sinr(rows))
}

/// Output SINR of LRCC with every forced principal count `1..=M`, then the
/// automatic rule (method `lrcc_auto`, sweep value = mean selected count).
pub fn run_pc_selection(cfg: &ScenarioConfig) -> Result<Table> {
    let lrcc_only = ScenarioConfig {
        methods: vec![Method::Lrcc],
        ..cfg.clone()
    };
    let point = Point::of(cfg);
    let mut rows = Vec::new();
    for n in 1..=cfg.m {
        let outcomes = run_trials(&lrcc_only, &point, Some(n), false)?;
        let pairs: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.lrcc).collect();
        rows.push(summarize("n_principal", n as f64, "lrcc", &pairs));
    }
    let outcomes = run_trials(&lrcc_only, &point, None, false)?;
    let pairs: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.lrcc).collect();
    let counts: Vec<f64> = outcomes.iter().filter_map(|o| o.final_n_desired.map(|n| n as f64)).collect();
    rows.push(summarize("n_principal", mean_and_stderr(&counts).0, "lrcc_auto", &pairs));
    Ok(Table::Sinr(rows))
}

/// Bounds and empirical MSE over `lambda_max in {0.5, 1.0, ..., 5.0}` for
/// each spread ratio in [`MSE_SPREAD_RATIOS`].
pub fn run_mse_bounds_figure(cfg: &ScenarioConfig) -> Result<Table> {
    let eps_max = cfg.eps_max.first();
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, 0));
    let mut rows = Vec::new();
    for &ratio in &MSE_SPREAD_RATIOS {
        for step in 1..=10 {
            let lambda_max = step as f64 * 0.5;
            let spec = EigenSpreadSpec::new(lambda_max, ratio * lambda_max, cfg.m)?;
            let bounds = mse_bounds(&spec, eps_max);
            let spectrum = spectrum_with_spread(&mut rng, &spec);
            let r = covariance_with_spectrum(&mut rng, &spectrum);
            rows.push(MseBoundsRow {
                spread_ratio: ratio,
                lambda_max,
                lower: bounds.lower,
                upper: bounds.upper,
                empirical_mse: empirical_additive_mse(&mut rng, &r, eps_max, MSE_EMPIRICAL_DRAWS),
            });
        }
    }
    Ok(Table::MseBounds(rows))
}

/// Median wall-clock time of [`solve_weights`] on random instances with
/// three sources, per relay count.
pub fn run_complexity_probe(sizes: &[usize], repetitions: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 0));
    let sources = SourceConfig::new(vec![1.0, 0.5, 0.5]).expect("positive powers");
    let rows = sizes
        .iter()
        .map(|&m| {
            let mut times: Vec<f64> = (0..repetitions)
                .map(|_| {
                    let f = complex_normal_matrix(&mut rng, m, 3, 1.0);
                    let g = complex_normal_matrix(&mut rng, m, 1, 1.0).column(0).into_owned();
                    let moments = exact_moments(&f, &g, &sources, 0.1).expect("consistent dimensions");
                    let start = Instant::now();
                    let sol = solve_weights(&moments, 1.0);
                    let elapsed = start.elapsed().as_secs_f64();
                    std::hint::black_box(sol).expect("well-conditioned instance");
                    elapsed
                })
                .collect();
            times.sort_by(f64::total_cmp);
            ComplexityRow {
                m,
                median_solve_seconds: times[times.len() / 2],
                repetitions,
            }
        })
        .collect();
    Table::Complexity(rows)
}

/// Text for the plot sidecar: how the numbers were produced.
pub fn provenance(exp: Experiment, cfg: &ScenarioConfig) -> String {
    format!(
        "experiment: {} ({})\n\
         seed derivation: trial t uses splitmix64(seed ^ splitmix64(t)) as a ChaCha8 key; \
         stream 0 draws geometry, gains, channels and epsilon, stream 1 the per-snapshot channel \
         observations, stream 2 symbols and noise. The sweep point does not enter the seed, so all \
         points share realizations.\n\
         configuration:\n{}",
        exp.name(),
        exp.analogue(),
        cfg.to_text()
    )
}
