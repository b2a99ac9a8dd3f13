//! Monte Carlo runs behind each CLI subcommand.
//!
//! Trials are split into fixed-size chunks that run on a rayon pool. Each
//! chunk folds its trials in order and the chunk summaries are merged in
//! chunk order, so results do not depend on the thread count.

use std::iter::repeat_n;
use std::ops::Range;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, Mode};
use super::metrics::{achievable_rate, RunningStats};
use crate::analysis::{certify_stable_point, BeamPolicy, StabilityTolerance, StablePointReport};
use crate::array::{ArrayConfig, ChannelState};
use crate::baselines::{Algorithm, AnyTracker};
use crate::estimation::{
    inverse_crlb_surface, min_crlb, optimal_pair, optimize_beam_offsets, OffsetOptimum, OffsetSearchGrid,
};
use crate::scenario::{static_truth, DynamicState, DynamicTruths};
use crate::tracker::{coarse_sweep, in_mainlobe, run_trial, Trajectory};

const TRIAL_CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("pilot overhead differs across algorithms in trial {trial}: {detail}")]
    PilotParity { trial: usize, detail: String },
}

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Truth = 0,
    Sweep = 1,
    Track = 2,
}

/// Generator for one `(trial, stream)` under a run seed. Every algorithm
/// draws its tracking noise from the same stream.
pub fn trial_rng(seed: u64, trial: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * 4 + stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticRow {
    pub slot: usize,
    pub algorithm: Algorithm,
    /// Direction MSE over trials whose final estimate is in the mainlobe.
    pub mse_x: f64,
    /// Direction MSE over every trial.
    pub mse_x_all: f64,
    pub crlb: f64,
    pub trials_converged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticReport {
    /// Algorithm-major, slots ascending.
    pub rows: Vec<StaticRow>,
    pub trials: usize,
    pub pilots_per_trial: usize,
    pub singular_slots: Vec<(Algorithm, usize)>,
}

impl StaticReport {
    pub fn row(&self, algorithm: Algorithm, slot: usize) -> Option<&StaticRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.slot == slot)
    }

    pub fn converged_fraction(&self, algorithm: Algorithm) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm)
            .map(|r| r.trials_converged as f64 / self.trials as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicRow {
    pub omega: f64,
    pub algorithm: Algorithm,
    pub mse_x: f64,
    pub mean_rate: f64,
    pub capacity: f64,
    pub rate_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicReport {
    /// Omega-major in config order, algorithms in config order.
    pub rows: Vec<DynamicRow>,
}

impl DynamicReport {
    pub fn row(&self, algorithm: Algorithm, omega: f64) -> Option<&DynamicRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.omega == omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceReport {
    /// `(δ₁, δ₂, 1/CRLB)`, row-major.
    pub points: Vec<(f64, f64, f64)>,
    pub optimum: OffsetOptimum<f64>,
    /// `2/(3Md)`.
    pub delta_star: f64,
}

fn require_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<(), HarnessError> {
    if cfg.mode != mode {
        return Err(ConfigError::Invalid(format!("expected mode {mode}, config has {}", cfg.mode)).into());
    }
    cfg.validate()?;
    Ok(())
}

/// Runs `f` over trial chunks in parallel and returns the results in order.
fn run_chunks<A, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<A>, HarnessError>
where
    A: Send,
    F: Fn(Range<usize>) -> Result<A, HarnessError> + Sync,
{
    let chunks: Vec<Range<usize>> = (0..cfg.trials)
        .step_by(TRIAL_CHUNK)
        .map(|s| s..(s + TRIAL_CHUNK).min(cfg.trials))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| chunks.into_par_iter().map(&f).collect())
}

fn check_parity(trial: usize, runs: &[Trajectory<f64>]) -> Result<(), HarnessError> {
    let first = runs[0].pilots_used();
    if runs.iter().any(|t| t.pilots_used() != first) {
        let detail = runs
            .iter()
            .map(|t| format!("{}={}", t.algorithm, t.pilots_used()))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(HarnessError::PilotParity { trial, detail });
    }
    Ok(())
}

/// Shared Stage-1 sweep, then every algorithm tracks the same truths with
/// the same noise stream.
fn track_all<I>(
    cfg: &ExperimentConfig,
    array: &ArrayConfig<f64>,
    trial: usize,
    sweep_truth: &ChannelState<f64>,
    truths: I,
) -> Result<Vec<Trajectory<f64>>, HarnessError>
where
    I: IntoIterator<Item = ChannelState<f64>> + Clone,
{
    let m0 = cfg.coarse_grid();
    let sched = cfg.schedule()?;
    let sweep = coarse_sweep(sweep_truth, array, m0, &mut trial_rng(cfg.seed, trial, Stream::Sweep))?;
    let runs: Vec<Trajectory<f64>> = cfg
        .algorithms
        .iter()
        .map(|&alg| {
            let mut tracker = AnyTracker::new(alg, sweep.estimate, sched, array, m0);
            let mut rng = trial_rng(cfg.seed, trial, Stream::Track);
            run_trial(&mut tracker, truths.clone(), array, array.num_antennas(), &mut rng)
        })
        .collect();
    check_parity(trial, &runs)?;
    Ok(runs)
}

struct StaticPartial {
    converged_mse: Vec<Vec<RunningStats>>,
    all_mse: Vec<Vec<RunningStats>>,
    converged: Vec<usize>,
    singular: Vec<usize>,
    pilots: usize,
}

impl StaticPartial {
    fn new(algs: usize, slots: usize) -> Self {
        Self {
            converged_mse: vec![vec![RunningStats::default(); slots]; algs],
            all_mse: vec![vec![RunningStats::default(); slots]; algs],
            converged: vec![0; algs],
            singular: vec![0; algs],
            pilots: 0,
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.converged_mse.iter_mut().zip(&other.converged_mse) {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        }
        for (a, b) in self.all_mse.iter_mut().zip(&other.all_mse) {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        }
        self.converged
            .iter_mut()
            .zip(&other.converged)
            .for_each(|(x, y)| *x += y);
        self.singular.iter_mut().zip(&other.singular).for_each(|(x, y)| *x += y);
        self.pilots = self.pilots.max(other.pilots);
    }
}

/// Static scenario: per-slot direction MSE of every algorithm next to the
/// optimal-design CRLB.
pub fn run_static_mse(cfg: &ExperimentConfig) -> Result<StaticReport, HarnessError> {
    require_mode(cfg, Mode::StaticMse)?;
    let array = cfg.array()?;
    let (algs, slots) = (cfg.algorithms.len(), cfg.slots);

    let partials = run_chunks(cfg, |range| {
        let mut acc = StaticPartial::new(algs, slots);
        for trial in range {
            let truth: ChannelState<f64> = static_truth(&mut trial_rng(cfg.seed, trial, Stream::Truth));
            let runs = track_all(cfg, &array, trial, &truth, repeat_n(truth, slots))?;
            acc.pilots = runs[0].pilots_used();
            for (k, run) in runs.iter().enumerate() {
                let end = run.last().map(|r| r.estimate.x).unwrap_or(f64::NAN);
                let converged = in_mainlobe(end, truth.x, &array);
                acc.converged[k] += usize::from(converged);
                acc.singular[k] += run.singular_slots();
                for (i, rec) in run.records.iter().enumerate() {
                    let e2 = rec.error * rec.error;
                    acc.all_mse[k][i].push(e2);
                    if converged {
                        acc.converged_mse[k][i].push(e2);
                    }
                }
            }
        }
        Ok(acc)
    })?;
    let mut total = StaticPartial::new(algs, slots);
    partials.iter().for_each(|p| total.merge(p));

    let unit = ChannelState::from_beta(Complex::new(1.0, 0.0), 0.0);
    let crlb: Vec<f64> = (1..=slots)
        .map(|n| min_crlb(&unit, n, &array))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(algs * slots);
    for (k, &algorithm) in cfg.algorithms.iter().enumerate() {
        for (i, &bound) in crlb.iter().enumerate() {
            rows.push(StaticRow {
                slot: i + 1,
                algorithm,
                mse_x: total.converged_mse[k][i].mean(),
                mse_x_all: total.all_mse[k][i].mean(),
                crlb: bound,
                trials_converged: total.converged[k],
            });
        }
    }
    Ok(StaticReport {
        rows,
        trials: cfg.trials,
        pilots_per_trial: total.pilots,
        singular_slots: cfg.algorithms.iter().copied().zip(total.singular).collect(),
    })
}

#[derive(Clone, Copy, Default)]
struct DynamicCell {
    mse: RunningStats,
    rate: RunningStats,
    capacity: RunningStats,
    fraction: RunningStats,
}

impl DynamicCell {
    fn merge(&mut self, o: &Self) {
        self.mse.merge(&o.mse);
        self.rate.merge(&o.rate);
        self.capacity.merge(&o.capacity);
        self.fraction.merge(&o.fraction);
    }
}

/// Rotating-user scenario: steady-state MSE and rate per angular velocity.
/// Averages cover the last half of the slots.
pub fn run_dynamic(cfg: &ExperimentConfig) -> Result<DynamicReport, HarnessError> {
    require_mode(cfg, Mode::Dynamic)?;
    let array = cfg.array()?;
    let data_snr = array.snr();
    let window = cfg.slots / 2;
    let mut rows = Vec::new();
    for &omega in &cfg.omega_list {
        let partials = run_chunks(cfg, |range| {
            let mut cells = vec![DynamicCell::default(); cfg.algorithms.len()];
            for trial in range {
                let mut rng = trial_rng(cfg.seed, trial, Stream::Truth);
                let start = DynamicState::new(0.0, omega, cfg.kappa_db, &mut rng)?;
                let truths: Vec<ChannelState<f64>> = DynamicTruths::new(start, cfg.slots, &mut rng).collect();
                let runs = track_all(cfg, &array, trial, &start.channel_state(), truths.iter().copied())?;
                for (cell, run) in cells.iter_mut().zip(&runs) {
                    for rec in &run.records[window..] {
                        let (rate, cap) = achievable_rate(&rec.truth, rec.estimate.x, &array, data_snr);
                        cell.mse.push(rec.error * rec.error);
                        cell.rate.push(rate);
                        cell.capacity.push(cap);
                        cell.fraction.push(rate / cap);
                    }
                }
            }
            Ok(cells)
        })?;
        let mut total = vec![DynamicCell::default(); cfg.algorithms.len()];
        for part in &partials {
            total.iter_mut().zip(part).for_each(|(a, b)| a.merge(b));
        }
        for (&algorithm, cell) in cfg.algorithms.iter().zip(&total) {
            rows.push(DynamicRow {
                omega,
                algorithm,
                mse_x: cell.mse.mean(),
                mean_rate: cell.rate.mean(),
                capacity: cell.capacity.mean(),
                rate_fraction: cell.fraction.mean(),
            });
        }
    }
    Ok(DynamicReport { rows })
}

/// Inverse direction CRLB over the offset grid at `β = 1`, `x = 0`.
pub fn run_crlb_surface(cfg: &ExperimentConfig) -> Result<SurfaceReport, HarnessError> {
    require_mode(cfg, Mode::CrlbSurface)?;
    let array = cfg.array()?;
    let psi = ChannelState::from_beta(Complex::new(1.0, 0.0), 0.0);
    let base = OffsetSearchGrid::default_for(&array);
    let grid = OffsetSearchGrid::new(base.lo, base.hi, cfg.grid_steps)?;
    let points = inverse_crlb_surface(&psi, &array, &grid);
    let optimum = optimize_beam_offsets(&psi, &array, &grid)?;
    Ok(SurfaceReport {
        points,
        optimum,
        delta_star: array.optimal_offset(),
    })
}

/// Checks whether `(β̂, x̂)` is a stable point for the configured truth,
/// with the optimal training pair centered at `x̂`.
pub fn run_analysis(cfg: &ExperimentConfig) -> Result<StablePointReport, HarnessError> {
    require_mode(cfg, Mode::Analysis)?;
    let array = cfg.array()?;
    let truth = ChannelState::new(Complex::new(cfg.beta_re, cfg.beta_im), cfg.x_true)?;
    let psi_hat = ChannelState::new(Complex::new(cfg.beta_hat_re, cfg.beta_hat_im), cfg.x_hat)?;
    let beams = optimal_pair(cfg.x_hat, &array);
    let policy = if cfg.follow_beams {
        BeamPolicy::Follow
    } else {
        BeamPolicy::Fixed
    };
    let tol = StabilityTolerance {
        drift: cfg.tol_f,
        eig: cfg.tol_eig,
    };
    Ok(certify_stable_point(&psi_hat, &truth, &beams, &array, policy, tol)?)
}
