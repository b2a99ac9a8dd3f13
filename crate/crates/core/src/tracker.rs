//! Two-stage recursive beam and channel tracking.
//!
//! Stage 1 sweeps `M` sector beams once and picks the best direction on a
//! fine grid. Stage 2 spends two pilots per slot on beams offset by `±δ*`
//! from the current direction estimate and applies one stochastic-Newton
//! step `ψ̂ₙ = ψ̂ₙ₋₁ + aₙ·I(ψ̂ₙ₋₁, Wₙ)⁻¹·∇log p(yₙ | ψ̂ₙ₋₁, Wₙ)`.

use num_complex::Complex;
use rand::Rng;

use crate::array::{beam, beam_pair, observe, steering, ArrayConfig, BeamPair, ChannelState, Observation};
use crate::error::{Error, Result};
use crate::estimation::Projections;
use crate::scalar::{inner, norm_sqr, Real};

/// Smallest `|β̂|` for which the Newton step is attempted.
pub const BETA_FLOOR: f64 = 1e-6;

/// Step-size sequence `aₙ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<T> {
    /// `aₙ = α/(n + N₀)`.
    Diminishing { alpha: T, n0: usize },
    /// `aₙ = value`.
    Constant { value: T },
}

impl<T: Real> StepSchedule<T> {
    pub fn diminishing(alpha: T, n0: usize) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidParameter("step-size alpha must be positive".into()));
        }
        Ok(Self::Diminishing { alpha, n0 })
    }

    pub fn constant(value: T) -> Result<Self> {
        if !(value > T::zero()) {
            return Err(Error::InvalidParameter("constant step size must be positive".into()));
        }
        Ok(Self::Constant { value })
    }
}

/// Step size for slot `n ≥ 1`.
pub fn step_size<T: Real>(n: usize, sched: &StepSchedule<T>) -> T {
    debug_assert!(n >= 1);
    match *sched {
        StepSchedule::Diminishing { alpha, n0 } => alpha / T::count(n + n0),
        StepSchedule::Constant { value } => value,
    }
}

/// Running state of the tracker after slot `slot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerState<T> {
    pub estimate: ChannelState<T>,
    pub slot: usize,
    pub schedule: StepSchedule<T>,
    pub delta_star: T,
}

impl<T: Real> TrackerState<T> {
    /// Fresh state at slot 0 with the array's `δ*`.
    pub fn new(estimate: ChannelState<T>, schedule: StepSchedule<T>, cfg: &ArrayConfig<T>) -> Self {
        Self {
            estimate,
            slot: 0,
            schedule,
            delta_star: cfg.optimal_offset(),
        }
    }

    /// Advances the slot counter without touching the estimate.
    pub fn hold(&self) -> Self {
        Self {
            slot: self.slot + 1,
            ..*self
        }
    }
}

/// Sector directions `2m/M - (M+1)/M`, `m = 1..=M`.
pub fn sweep_directions<T: Real>(cfg: &ArrayConfig<T>) -> Vec<T> {
    let m = T::count(cfg.num_antennas());
    (1..=cfg.num_antennas())
        .map(|k| T::lit(2.0) * T::count(k) / m - (m + T::one()) / m)
        .collect()
}

/// Stage-1 sector beams `a(direction)/√M`.
pub fn sweep_beams<T: Real>(cfg: &ArrayConfig<T>) -> Vec<Vec<Complex<T>>> {
    sweep_directions(cfg).into_iter().map(|x| beam(x, cfg)).collect()
}

/// Outcome of the Stage-1 sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub observations: Vec<Complex<T>>,
    pub beams: Vec<Vec<Complex<T>>>,
    pub estimate: ChannelState<T>,
}

/// The `m0`-point direction grid `{(2k - 1 - m0)/m0}`.
pub fn coarse_grid<T: Real>(m0: usize) -> impl Iterator<Item = T> {
    let m0f = T::count(m0);
    (1..=m0).map(move |k| (T::count(2 * k) - T::one() - m0f) / m0f)
}

/// Matching-pursuit initial estimate from `M` sweep observations.
///
/// `x̂₀` maximizes `|a(x̂)ᴴW̃ỹ|` over the coarse grid (first maximum wins),
/// and `β̂₀ = cᴴỹ/(s‖c‖²)` with `c = W̃ᴴa(x̂₀)`.
pub fn coarse_init<T: Real>(
    sweep_obs: &[Complex<T>],
    sweep_beams: &[Vec<Complex<T>>],
    cfg: &ArrayConfig<T>,
    m0: usize,
) -> Result<ChannelState<T>> {
    if m0 < cfg.num_antennas() {
        return Err(Error::InvalidParameter(format!(
            "coarse grid size {m0} below antenna count {}",
            cfg.num_antennas()
        )));
    }
    if sweep_obs.len() != sweep_beams.len() {
        return Err(Error::InvalidParameter("sweep observation/beam count mismatch".into()));
    }
    Ok(grid_matching_pursuit(sweep_obs, sweep_beams, cfg, m0, Correlation::Raw))
}

/// Scoring of grid directions in [`grid_matching_pursuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Correlation {
    /// `|cᴴỹ|`.
    Raw,
    /// `|cᴴỹ|/‖c‖`, the matched atom of orthogonal matching pursuit.
    Normalized,
}

/// Single-atom matching pursuit over the `m0`-point grid, where the atom
/// for direction `x̂` is `c = W̃ᴴa(x̂)`. The first maximum wins.
pub(crate) fn grid_matching_pursuit<T: Real>(
    obs: &[Complex<T>],
    beams: &[Vec<Complex<T>>],
    cfg: &ArrayConfig<T>,
    m0: usize,
    rule: Correlation,
) -> ChannelState<T> {
    let atom = |x: T| -> Vec<Complex<T>> {
        let a = steering(x, cfg);
        beams.iter().map(|w| inner(w, &a)).collect()
    };
    let mut best = (T::nan(), -T::one());
    for x in coarse_grid::<T>(m0) {
        let c = atom(x);
        let corr = inner(&c, obs).norm();
        let v = match rule {
            Correlation::Raw => corr,
            Correlation::Normalized => {
                let n = norm_sqr(&c).sqrt();
                if n > T::zero() {
                    corr / n
                } else {
                    T::zero()
                }
            }
        };
        if best.0.is_nan() || v > best.1 {
            best = (x, v);
        }
    }
    let x0 = best.0;
    let c = atom(x0);
    let cc = norm_sqr(&c);
    let beta = if cc > T::zero() {
        inner(&c, obs) / (cfg.pilot() * cc)
    } else {
        Complex::new(T::zero(), T::zero())
    };
    ChannelState::from_beta(beta, x0)
}

/// Runs Stage 1 against `truth`: `M` pilots through the sector beams.
pub fn coarse_sweep<T: Real, R: Rng + ?Sized>(
    truth: &ChannelState<T>,
    cfg: &ArrayConfig<T>,
    m0: usize,
    rng: &mut R,
) -> Result<SweepResult<T>> {
    let beams = sweep_beams(cfg);
    let a = steering(truth.x, cfg);
    let gain = cfg.pilot() * truth.beta();
    let var = cfg.noise_power();
    let observations: Vec<Complex<T>> = beams
        .iter()
        .map(|w| {
            let mean = gain * inner(w, &a);
            if var > T::zero() {
                mean + crate::array::complex_gaussian(rng, var)
            } else {
                mean
            }
        })
        .collect();
    let estimate = coarse_init(&observations, &beams, cfg, m0)?;
    Ok(SweepResult {
        observations,
        beams,
        estimate,
    })
}

/// Open interval `(x0 - λ/(Md), x0 + λ/(Md))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mainlobe<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Mainlobe<T> {
    pub fn contains(&self, x: T) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn half_width(&self) -> T {
        (self.hi - self.lo) / T::lit(2.0)
    }
}

pub fn mainlobe<T: Real>(x0: T, cfg: &ArrayConfig<T>) -> Mainlobe<T> {
    let hw = cfg.mainlobe_half_width();
    Mainlobe {
        lo: x0 - hw,
        hi: x0 + hw,
    }
}

/// Whether `x_hat` lies in the mainlobe of `x`, up to array aliasing.
pub fn in_mainlobe<T: Real>(x_hat: T, x: T, cfg: &ArrayConfig<T>) -> bool {
    cfg.direction_error(x_hat, x).abs() < cfg.mainlobe_half_width()
}

/// Training pair for the next slot: `a(x̂ ∓ δ*)/√M`.
pub fn training_beams<T: Real>(state: &TrackerState<T>, cfg: &ArrayConfig<T>) -> BeamPair<T> {
    beam_pair(state.estimate.x, -state.delta_star, state.delta_star, cfg)
}

/// One RBCT slot update, using the hand-inverted 3×3 Fisher matrix.
pub fn rbct_update<T: Real>(
    state: &TrackerState<T>,
    obs: &Observation<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> Result<TrackerState<T>> {
    let n = state.slot + 1;
    let dir = newton_direction(&state.estimate, obs, beams, cfg)?;
    let a_n = step_size(n, &state.schedule);
    let mut next = state.estimate.offset(dir, a_n);
    next.x = cfg.wrap_direction(next.x);
    Ok(TrackerState {
        estimate: next,
        slot: n,
        ..*state
    })
}

/// `I(ψ̂, W)⁻¹·∇log p(y | ψ̂, W)` in closed form.
///
/// With `ĝ = Wᴴa(x̂)`, `ê = β̂Wᴴȧ(x̂)`, `l = ‖ĝ‖‖ê‖`, `c = ĝᴴê` and
/// `r = y - sβ̂ĝ`, the direction is
/// `K·[Re{s*ĝᴴr}, Im{s*ĝᴴr}, Re{s*êᴴr}]ᵀ / (|s|²‖ĝ‖²(l² - |c|²))`.
pub fn newton_direction<T: Real>(
    psi_hat: &ChannelState<T>,
    obs: &Observation<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> Result<[T; 3]> {
    let p = Projections::at(psi_hat.x, beams, cfg);
    newton_direction_from(psi_hat, obs, &p, cfg)
}

pub(crate) fn newton_direction_from<T: Real>(
    psi_hat: &ChannelState<T>,
    obs: &Observation<T>,
    p: &Projections<T>,
    cfg: &ArrayConfig<T>,
) -> Result<[T; 3]> {
    let beta = psi_hat.beta();
    if !(beta.norm() > T::lit(BETA_FLOOR)) {
        return Err(Error::SingularUpdate("channel coefficient estimate below floor"));
    }
    let (_, ok) = p.gram_gap();
    if !ok {
        return Err(Error::SingularUpdate("training beams are degenerate"));
    }
    let s = cfg.pilot();
    let g = p.g;
    let e = p.e(beta);
    let gg = p.g_norm_sqr();
    let l2 = gg * norm_sqr(&e);
    let c = inner(&g, &e);
    let gap = l2 - c.norm_sqr();

    let y = obs.to_array();
    let r = [y[0] - s * beta * g[0], y[1] - s * beta * g[1]];
    let gr = s.conj() * inner(&g, &r);
    let er = s.conj() * inner(&e, &r);
    let b = [gr.re, gr.im, er.re];

    let k = [
        [l2 - c.im * c.im, c.re * c.im, -gg * c.re],
        [c.re * c.im, l2 - c.re * c.re, -gg * c.im],
        [-gg * c.re, -gg * c.im, gg * gg],
    ];
    let denom = s.norm_sqr() * gg * gap;
    let mut out = [T::zero(); 3];
    for (o, row) in out.iter_mut().zip(&k) {
        *o = (row[0] * b[0] + row[1] * b[1] + row[2] * b[2]) / denom;
    }
    Ok(out)
}

/// Compact record of a training pair: its center and offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec<T> {
    pub center: T,
    pub offsets: (T, T),
}

impl<T: Real> BeamSpec<T> {
    pub fn to_pair(&self, cfg: &ArrayConfig<T>) -> BeamPair<T> {
        beam_pair(self.center, self.offsets.0, self.offsets.1, cfg)
    }
}

/// What a tracker did in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome<T> {
    pub beams: Option<BeamSpec<T>>,
    pub singular: bool,
    pub pilots: usize,
}

/// A slot-by-slot tracking algorithm driven against a ground truth.
pub trait BeamTracker<T: Real> {
    fn name(&self) -> &'static str;

    fn estimate(&self) -> ChannelState<T>;

    /// Spends this slot's pilots against `truth` and updates the estimate.
    fn advance<R: Rng + ?Sized>(
        &mut self,
        truth: &ChannelState<T>,
        cfg: &ArrayConfig<T>,
        rng: &mut R,
    ) -> SlotOutcome<T>;
}

/// The RBCT tracker as a [`BeamTracker`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rbct<T> {
    pub state: TrackerState<T>,
}

impl<T: Real> Rbct<T> {
    pub fn new(init: ChannelState<T>, schedule: StepSchedule<T>, cfg: &ArrayConfig<T>) -> Self {
        Self {
            state: TrackerState::new(init, schedule, cfg),
        }
    }
}

impl<T: Real> BeamTracker<T> for Rbct<T> {
    fn name(&self) -> &'static str {
        "rbct"
    }

    fn estimate(&self) -> ChannelState<T> {
        self.state.estimate
    }

    fn advance<R: Rng + ?Sized>(
        &mut self,
        truth: &ChannelState<T>,
        cfg: &ArrayConfig<T>,
        rng: &mut R,
    ) -> SlotOutcome<T> {
        let beams = training_beams(&self.state, cfg);
        let obs = observe(truth, &beams, cfg, rng);
        let spec = BeamSpec {
            center: self.state.estimate.x,
            offsets: beams.offsets,
        };
        let singular = match rbct_update(&self.state, &obs, &beams, cfg) {
            Ok(next) => {
                self.state = next;
                false
            }
            Err(_) => {
                self.state = self.state.hold();
                true
            }
        };
        SlotOutcome {
            beams: Some(spec),
            singular,
            pilots: 2,
        }
    }
}

/// Per-slot record of a tracking run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord<T> {
    pub slot: usize,
    pub truth: ChannelState<T>,
    pub estimate: ChannelState<T>,
    pub beams: Option<BeamSpec<T>>,
    /// `x̂ - x`, reduced modulo aliasing.
    pub error: T,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub algorithm: &'static str,
    /// Pilots spent before the first tracking slot (Stage 1).
    pub initial_pilots: usize,
    pub tracking_pilots: usize,
    pub records: Vec<SlotRecord<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn pilots_used(&self) -> usize {
        self.initial_pilots + self.tracking_pilots
    }

    pub fn singular_slots(&self) -> usize {
        self.records.iter().filter(|r| r.singular).count()
    }

    pub fn last(&self) -> Option<&SlotRecord<T>> {
        self.records.last()
    }
}

/// Drives any tracker over a stream of per-slot truths.
pub fn run_trial<T, K, I, R>(
    tracker: &mut K,
    truths: I,
    cfg: &ArrayConfig<T>,
    initial_pilots: usize,
    rng: &mut R,
) -> Trajectory<T>
where
    T: Real,
    K: BeamTracker<T>,
    I: IntoIterator<Item = ChannelState<T>>,
    R: Rng + ?Sized,
{
    let mut records = Vec::new();
    let mut tracking_pilots = 0;
    for (i, truth) in truths.into_iter().enumerate() {
        let out = tracker.advance(&truth, cfg, rng);
        tracking_pilots += out.pilots;
        let estimate = tracker.estimate();
        records.push(SlotRecord {
            slot: i + 1,
            truth,
            estimate,
            beams: out.beams,
            error: cfg.direction_error(estimate.x, truth.x),
            singular: out.singular,
        });
    }
    Trajectory {
        algorithm: tracker.name(),
        initial_pilots,
        tracking_pilots,
        records,
    }
}

/// Stage-2 RBCT from `init` over the given truths.
pub fn run_tracker<T, I, R>(
    init: ChannelState<T>,
    truths: I,
    sched: StepSchedule<T>,
    cfg: &ArrayConfig<T>,
    rng: &mut R,
) -> Trajectory<T>
where
    T: Real,
    I: IntoIterator<Item = ChannelState<T>>,
    R: Rng + ?Sized,
{
    let mut tracker = Rbct::new(init, sched, cfg);
    run_trial(&mut tracker, truths, cfg, 0, rng)
}
