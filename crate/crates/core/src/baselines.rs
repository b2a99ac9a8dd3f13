//! Simplified reference trackers sharing RBCT's budget of two pilots per slot.
//!
//! These are compact stand-ins for three families of comparison schemes, not
//! reproductions of any particular published implementation:
//!
//! * `ls`: same `±δ*` training pair as RBCT, least-squares coefficient, and a
//!   scalar Newton step on the direction alone.
//! * `sweep`: rolling exhaustive sector sweep, two sectors per slot.
//! * `cs`: blocks of pseudo-random constant-modulus beams followed by a
//!   single-atom matching-pursuit fit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;

use crate::array::{complex_gaussian, observe, steering, ArrayConfig, BeamPair, ChannelState, Observation};
use crate::error::{Error, Result};
use crate::estimation::Projections;
use crate::scalar::{cis, inner, Real};
use crate::tracker::{
    grid_matching_pursuit, step_size, sweep_beams, sweep_directions, training_beams, BeamSpec, BeamTracker,
    Correlation, Rbct, SlotOutcome, StepSchedule, TrackerState, BETA_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    LsTracker,
    SweepTracker,
    OneshotCs,
}

/// Any tracker the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rbct,
    Baseline(BaselineKind),
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Rbct,
        Algorithm::Baseline(BaselineKind::LsTracker),
        Algorithm::Baseline(BaselineKind::SweepTracker),
        Algorithm::Baseline(BaselineKind::OneshotCs),
    ];

    /// Config-file key.
    pub fn key(&self) -> &'static str {
        match self {
            Algorithm::Rbct => "rbct",
            Algorithm::Baseline(BaselineKind::LsTracker) => "ls",
            Algorithm::Baseline(BaselineKind::SweepTracker) => "sweep",
            Algorithm::Baseline(BaselineKind::OneshotCs) => "cs",
        }
    }

    /// Label used in reports; baselines are marked as simplified.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Rbct => "rbct",
            Algorithm::Baseline(BaselineKind::LsTracker) => "ls(simplified)",
            Algorithm::Baseline(BaselineKind::SweepTracker) => "sweep(simplified)",
            Algorithm::Baseline(BaselineKind::OneshotCs) => "cs(simplified)",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.key() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}' (expected rbct, ls, sweep or cs)")))
    }
}

/// Least-squares coefficient followed by a scalar Newton step on `x̂`.
///
/// `β̂ = ĝᴴy/(s‖ĝ‖²)`, then `x̂ += aₙ·[∇log p]₃/I₃,₃` at `(β̂ₙ, x̂ₙ₋₁)`.
pub fn ls_tracker_update<T: Real>(
    state: &TrackerState<T>,
    obs: &Observation<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    a_n: T,
) -> Result<TrackerState<T>> {
    let p = Projections::at(state.estimate.x, beams, cfg);
    let gg = p.g_norm_sqr();
    if !(gg > T::lit(1e-12)) {
        return Err(Error::SingularUpdate("beam gain towards the estimate vanishes"));
    }
    let s = cfg.pilot();
    let y = obs.to_array();
    let beta = inner(&p.g, &y) / (s * gg);
    if !(beta.norm() > T::lit(BETA_FLOOR)) {
        return Err(Error::SingularUpdate("least-squares coefficient below floor"));
    }
    let r = [y[0] - s * beta * p.g[0], y[1] - s * beta * p.g[1]];
    let e = p.e(beta);
    let score_x = T::lit(2.0) / cfg.noise_power() * (s.conj() * inner(&e, &r)).re;
    let info_x = T::lit(2.0) * s.norm_sqr() / cfg.noise_power() * beta.norm_sqr() * p.e_dot_norm_sqr();
    if !(info_x > T::zero()) {
        return Err(Error::SingularUpdate("direction information vanishes"));
    }
    let x = cfg.wrap_direction(state.estimate.x + a_n * score_x / info_x);
    Ok(TrackerState {
        estimate: ChannelState::from_beta(beta, x),
        slot: state.slot + 1,
        ..*state
    })
}

/// Tracker wrapper around [`ls_tracker_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct LsTracker<T> {
    pub state: TrackerState<T>,
}

impl<T: Real> LsTracker<T> {
    pub fn new(init: ChannelState<T>, schedule: StepSchedule<T>, cfg: &ArrayConfig<T>) -> Self {
        Self {
            state: TrackerState::new(init, schedule, cfg),
        }
    }
}

impl<T: Real> BeamTracker<T> for LsTracker<T> {
    fn name(&self) -> &'static str {
        Algorithm::Baseline(BaselineKind::LsTracker).label()
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
        let a_n = step_size(self.state.slot + 1, &self.state.schedule);
        let singular = match ls_tracker_update(&self.state, &obs, &beams, cfg, a_n) {
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

/// Pilot observation through an arbitrary beam.
fn pilot_through<T: Real, R: Rng + ?Sized>(
    w: &[Complex<T>],
    a_true: &[Complex<T>],
    beta: Complex<T>,
    cfg: &ArrayConfig<T>,
    rng: &mut R,
) -> Complex<T> {
    let mean = cfg.pilot() * beta * inner(w, a_true);
    if cfg.noise_power() > T::zero() {
        mean + complex_gaussian(rng, cfg.noise_power())
    } else {
        mean
    }
}

/// Rolling exhaustive sweep over the `M` sector beams, two per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTracker<T> {
    estimate: ChannelState<T>,
    directions: Vec<T>,
    beams: Vec<Vec<Complex<T>>>,
    observations: Vec<Complex<T>>,
    slot_in_pass: usize,
}

impl<T: Real> SweepTracker<T> {
    pub fn new(init: ChannelState<T>, cfg: &ArrayConfig<T>) -> Self {
        let m = cfg.num_antennas();
        Self {
            estimate: init,
            directions: sweep_directions(cfg),
            beams: sweep_beams(cfg),
            observations: vec![Complex::new(T::zero(), T::zero()); m],
            slot_in_pass: 0,
        }
    }

    /// Slots per complete pass, `⌈M/2⌉`.
    pub fn pass_len(&self) -> usize {
        self.beams.len().div_ceil(2)
    }
}

/// One slot of the rolling sweep; re-estimates after the last slot of a pass.
pub fn sweep_tracker_update<T: Real, R: Rng + ?Sized>(
    tracker: &mut SweepTracker<T>,
    truth: &ChannelState<T>,
    cfg: &ArrayConfig<T>,
    rng: &mut R,
) {
    let m = tracker.beams.len();
    let a = steering(truth.x, cfg);
    let k = tracker.slot_in_pass;
    // With odd M the final slot's second pilot re-measures the last sector.
    for idx in [2 * k, (2 * k + 1).min(m - 1)] {
        tracker.observations[idx] = pilot_through(&tracker.beams[idx], &a, truth.beta(), cfg, rng);
    }
    tracker.slot_in_pass += 1;
    if tracker.slot_in_pass == tracker.pass_len() {
        tracker.slot_in_pass = 0;
        let (best, y) = tracker
            .observations
            .iter()
            .enumerate()
            .fold((0, tracker.observations[0]), |acc, (i, y)| {
                if y.norm() > acc.1.norm() {
                    (i, *y)
                } else {
                    acc
                }
            });
        // the sector beam is aimed at its own center, so wᴴa(x̂) = √M
        let gain = T::count(m).sqrt();
        tracker.estimate = ChannelState::from_beta(y / (cfg.pilot() * gain), tracker.directions[best]);
    }
}

impl<T: Real> BeamTracker<T> for SweepTracker<T> {
    fn name(&self) -> &'static str {
        Algorithm::Baseline(BaselineKind::SweepTracker).label()
    }

    fn estimate(&self) -> ChannelState<T> {
        self.estimate
    }

    fn advance<R: Rng + ?Sized>(
        &mut self,
        truth: &ChannelState<T>,
        cfg: &ArrayConfig<T>,
        rng: &mut R,
    ) -> SlotOutcome<T> {
        sweep_tracker_update(self, truth, cfg, rng);
        SlotOutcome {
            beams: None,
            singular: false,
            pilots: 2,
        }
    }
}

/// Block-wise pseudo-random beams with a matching-pursuit fit per block.
#[derive(Debug, Clone, PartialEq)]
pub struct OneshotCs<T> {
    estimate: ChannelState<T>,
    block_slots: usize,
    m0: usize,
    beams: Vec<Vec<Complex<T>>>,
    observations: Vec<Complex<T>>,
    slot_in_block: usize,
}

impl<T: Real> OneshotCs<T> {
    /// Blocks last `⌈M/2⌉` slots; `m0` is the fit grid size.
    pub fn new(init: ChannelState<T>, cfg: &ArrayConfig<T>, m0: usize) -> Self {
        Self {
            estimate: init,
            block_slots: cfg.num_antennas().div_ceil(2),
            m0,
            beams: Vec::new(),
            observations: Vec::new(),
            slot_in_block: 0,
        }
    }

    pub fn block_slots(&self) -> usize {
        self.block_slots
    }

    pub fn current_beams(&self) -> &[Vec<Complex<T>>] {
        &self.beams
    }
}

/// Constant-modulus beam with i.i.d. uniform phases and unit norm.
pub fn random_cm_beam<T: Real, R: Rng + ?Sized>(cfg: &ArrayConfig<T>, rng: &mut R) -> Vec<Complex<T>> {
    let scale = T::one() / T::count(cfg.num_antennas()).sqrt();
    (0..cfg.num_antennas())
        .map(|_| cis(T::lit(rng.random_range(0.0..std::f64::consts::TAU))) * scale)
        .collect()
}

/// One slot of the block scheme; refits after the last slot of a block.
pub fn oneshot_cs_update<T: Real, R: Rng + ?Sized>(
    tracker: &mut OneshotCs<T>,
    truth: &ChannelState<T>,
    cfg: &ArrayConfig<T>,
    rng: &mut R,
) {
    if tracker.slot_in_block == 0 {
        tracker.beams = (0..2 * tracker.block_slots).map(|_| random_cm_beam(cfg, rng)).collect();
        tracker.observations.clear();
    }
    let a = steering(truth.x, cfg);
    let k = tracker.slot_in_block;
    for w in &tracker.beams[2 * k..2 * k + 2] {
        tracker.observations.push(pilot_through(w, &a, truth.beta(), cfg, rng));
    }
    tracker.slot_in_block += 1;
    if tracker.slot_in_block == tracker.block_slots {
        tracker.slot_in_block = 0;
        tracker.estimate = grid_matching_pursuit(
            &tracker.observations,
            &tracker.beams,
            cfg,
            tracker.m0,
            Correlation::Normalized,
        );
    }
}

impl<T: Real> BeamTracker<T> for OneshotCs<T> {
    fn name(&self) -> &'static str {
        Algorithm::Baseline(BaselineKind::OneshotCs).label()
    }

    fn estimate(&self) -> ChannelState<T> {
        self.estimate
    }

    fn advance<R: Rng + ?Sized>(
        &mut self,
        truth: &ChannelState<T>,
        cfg: &ArrayConfig<T>,
        rng: &mut R,
    ) -> SlotOutcome<T> {
        oneshot_cs_update(self, truth, cfg, rng);
        SlotOutcome {
            beams: None,
            singular: false,
            pilots: 2,
        }
    }
}

/// Enum dispatch over every tracker the harness knows.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTracker<T> {
    Rbct(Rbct<T>),
    Ls(LsTracker<T>),
    Sweep(SweepTracker<T>),
    Cs(OneshotCs<T>),
}

impl<T: Real> AnyTracker<T> {
    pub fn new(
        algorithm: Algorithm,
        init: ChannelState<T>,
        schedule: StepSchedule<T>,
        cfg: &ArrayConfig<T>,
        m0: usize,
    ) -> Self {
        match algorithm {
            Algorithm::Rbct => AnyTracker::Rbct(Rbct::new(init, schedule, cfg)),
            Algorithm::Baseline(BaselineKind::LsTracker) => AnyTracker::Ls(LsTracker::new(init, schedule, cfg)),
            Algorithm::Baseline(BaselineKind::SweepTracker) => AnyTracker::Sweep(SweepTracker::new(init, cfg)),
            Algorithm::Baseline(BaselineKind::OneshotCs) => AnyTracker::Cs(OneshotCs::new(init, cfg, m0)),
        }
    }
}

impl<T: Real> BeamTracker<T> for AnyTracker<T> {
    fn name(&self) -> &'static str {
        match self {
            AnyTracker::Rbct(t) => t.name(),
            AnyTracker::Ls(t) => t.name(),
            AnyTracker::Sweep(t) => t.name(),
            AnyTracker::Cs(t) => t.name(),
        }
    }

    fn estimate(&self) -> ChannelState<T> {
        match self {
            AnyTracker::Rbct(t) => t.estimate(),
            AnyTracker::Ls(t) => t.estimate(),
            AnyTracker::Sweep(t) => t.estimate(),
            AnyTracker::Cs(t) => t.estimate(),
        }
    }

    fn advance<R: Rng + ?Sized>(
        &mut self,
        truth: &ChannelState<T>,
        cfg: &ArrayConfig<T>,
        rng: &mut R,
    ) -> SlotOutcome<T> {
        match self {
            AnyTracker::Rbct(t) => t.advance(truth, cfg, rng),
            AnyTracker::Ls(t) => t.advance(truth, cfg, rng),
            AnyTracker::Sweep(t) => t.advance(truth, cfg, rng),
            AnyTracker::Cs(t) => t.advance(truth, cfg, rng),
        }
    }
}
