//! Ground-truth generators: random static directions, a bounded angular
//! sweep for dynamic runs, and Rician-faded channel coefficients.

use num_complex::Complex;
use rand::Rng;

use crate::array::{complex_gaussian, ChannelState};
use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Largest angular velocity accepted for dynamic runs, rad/slot.
pub const MAX_OMEGA: f64 = 0.04;

/// `|θ| ≤ π/3` in dynamic runs.
pub fn dynamic_theta_bound<T: Real>() -> T {
    T::FRAC_PI_3()
}

/// Static truth: `θ ~ U[-π/2, π/2]`, `x = sin θ`, `β = 1`.
pub fn static_truth<T: Real, R: Rng + ?Sized>(rng: &mut R) -> ChannelState<T> {
    let theta = T::lit(rng.random_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2));
    ChannelState::from_beta(Complex::new(T::one(), T::zero()), theta.sin())
}

/// Rician coefficient with a fixed line-of-sight phase and unit mean power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFading<T> {
    pub k_factor: T,
    pub los_phase: T,
}

impl<T: Real> RicianFading<T> {
    /// Draws the line-of-sight phase uniformly on `[0, 2π)`.
    pub fn new<R: Rng + ?Sized>(kappa_db: T, rng: &mut R) -> Result<Self> {
        if !kappa_db.is_finite() {
            return Err(Error::InvalidParameter("K-factor must be finite".into()));
        }
        let los_phase = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
        Ok(Self {
            k_factor: T::lit(10.0).powf(kappa_db / T::lit(10.0)),
            los_phase,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex<T> {
        let k = self.k_factor;
        let los = (k / (k + T::one())).sqrt();
        let diffuse = (T::one() / (k + T::one())).sqrt();
        cis(self.los_phase) * los + complex_gaussian(rng, T::one()) * diffuse
    }
}

/// One Rician draw with its own random line-of-sight phase.
pub fn rician_coefficient<T: Real, R: Rng + ?Sized>(rng: &mut R, kappa_db: T) -> Result<Complex<T>> {
    Ok(RicianFading::new(kappa_db, rng)?.sample(rng))
}

/// Dynamic truth: `θₙ = θₙ₋₁ + sₙ₋₁·ω`, reflected inside `[-π/3, π/3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicState<T> {
    pub theta: T,
    /// `+1` or `-1`.
    pub rotation_sign: i8,
    pub omega: T,
    pub fading: RicianFading<T>,
    pub beta: Complex<T>,
    pub slot: usize,
}

impl<T: Real> DynamicState<T> {
    /// Starts at `θ₀ = theta0` rotating in the positive direction, with a
    /// first coefficient drawn from the fading model.
    pub fn new<R: Rng + ?Sized>(theta0: T, omega: T, kappa_db: T, rng: &mut R) -> Result<Self> {
        if !(omega >= T::zero() && omega <= T::lit(MAX_OMEGA)) {
            return Err(Error::InvalidParameter(format!(
                "angular velocity {omega:?} outside [0, {MAX_OMEGA}]"
            )));
        }
        if theta0.abs() > dynamic_theta_bound() {
            return Err(Error::InvalidParameter("initial angle outside [-π/3, π/3]".into()));
        }
        let fading = RicianFading::new(kappa_db, rng)?;
        let beta = fading.sample(rng);
        Ok(Self {
            theta: theta0,
            rotation_sign: 1,
            omega,
            fading,
            beta,
            slot: 0,
        })
    }

    pub fn channel_state(&self) -> ChannelState<T> {
        ChannelState::from_beta(self.beta, self.theta.sin())
    }
}

/// Advances the angle one slot, flipping direction at the band edge, and
/// redraws the coefficient.
pub fn dynamic_step<T: Real, R: Rng + ?Sized>(state: &DynamicState<T>, rng: &mut R) -> DynamicState<T> {
    let bound = dynamic_theta_bound::<T>();
    let mut sign = state.rotation_sign;
    let step = |s: i8| state.theta + T::lit(s as f64) * state.omega;
    if step(sign).abs() > bound {
        sign = -sign;
    }
    let theta = step(sign).max(-bound).min(bound);
    DynamicState {
        theta,
        rotation_sign: sign,
        beta: state.fading.sample(rng),
        slot: state.slot + 1,
        ..*state
    }
}

/// Iterator over the per-slot truths of a dynamic run (slot 1 onwards).
pub struct DynamicTruths<'a, T, R: ?Sized> {
    state: DynamicState<T>,
    rng: &'a mut R,
    remaining: usize,
}

impl<'a, T: Real, R: Rng + ?Sized> DynamicTruths<'a, T, R> {
    pub fn new(start: DynamicState<T>, slots: usize, rng: &'a mut R) -> Self {
        Self {
            state: start,
            rng,
            remaining: slots,
        }
    }
}

impl<T: Real, R: Rng + ?Sized> Iterator for DynamicTruths<'_, T, R> {
    type Item = ChannelState<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.state = dynamic_step(&self.state, self.rng);
        Some(self.state.channel_state())
    }
}
