//! Uniform linear phased-array model: steering vectors, training beams,
//! noisy pilot observations and the observation log-likelihood.
//!
//! The steering vector for direction `x = sin(θ)` has entries
//! `a_m(x) = exp(-j·2π·(d/λ)·m·x)` for `m = 0..M`. The spacing is stored
//! as the ratio `d/λ`, so the wavelength never appears on its own.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{cis, inner, Real};

/// Static description of the array and the pilot link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig<T> {
    num_antennas: usize,
    spacing: T,
    pilot: Complex<T>,
    noise_power: T,
}

impl<T: Real> ArrayConfig<T> {
    pub fn new(num_antennas: usize, spacing: T, pilot: Complex<T>, noise_power: T) -> Result<Self> {
        if num_antennas < 2 {
            return Err(Error::InvalidArray(format!(
                "need at least 2 antennas, got {num_antennas}"
            )));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidArray("spacing must be positive".into()));
        }
        if !(pilot.norm_sqr() > T::zero()) {
            return Err(Error::InvalidArray("pilot symbol must be non-zero".into()));
        }
        if !(noise_power > T::zero()) || !noise_power.is_finite() {
            return Err(Error::InvalidArray("noise power must be positive".into()));
        }
        Ok(Self {
            num_antennas,
            spacing,
            pilot,
            noise_power,
        })
    }

    /// Builds a configuration whose transmit SNR `|s|²/σ₀²` equals `snr_db`.
    pub fn from_snr_db(num_antennas: usize, spacing: T, pilot: Complex<T>, snr_db: T) -> Result<Self> {
        let snr = T::lit(10.0).powf(snr_db / T::lit(10.0));
        Self::new(num_antennas, spacing, pilot, pilot.norm_sqr() / snr)
    }

    /// Same array with a different noise power. Zero is accepted so that
    /// noiseless observations can be synthesized; likelihood and Fisher
    /// computations need a positive value.
    pub fn with_noise_power(mut self, noise_power: T) -> Self {
        assert!(noise_power >= T::zero(), "noise power must be non-negative");
        self.noise_power = noise_power;
        self
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Element spacing in wavelengths (`d/λ`).
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn pilot(&self) -> Complex<T> {
        self.pilot
    }

    pub fn noise_power(&self) -> T {
        self.noise_power
    }

    /// Transmit SNR `|s|²/σ₀²` (linear).
    pub fn snr(&self) -> T {
        self.pilot.norm_sqr() / self.noise_power
    }

    /// Training-beam offset `2/(3·M·d/λ)` used by the tracker.
    pub fn optimal_offset(&self) -> T {
        T::lit(2.0) / (T::lit(3.0) * T::count(self.num_antennas) * self.spacing)
    }

    /// Half-width `1/(M·d/λ)` of the mainlobe around a direction.
    pub fn mainlobe_half_width(&self) -> T {
        T::one() / (T::count(self.num_antennas) * self.spacing)
    }

    /// Period of the steering vector in `x`, `λ/d`.
    pub fn spatial_period(&self) -> T {
        T::one() / self.spacing
    }

    fn aliases_within_domain(&self) -> bool {
        self.spatial_period() <= T::lit(2.0) * (T::one() + T::epsilon())
    }

    /// Maps a direction estimate back into `[-1, 1]`.
    ///
    /// When the array aliases inside the visible region (`d ≥ λ/2`), `x` and
    /// `x + λ/d` produce the same steering vector and the estimate is reduced
    /// modulo the period onto `[-1, -1 + λ/d)`. Otherwise it is clamped.
    pub fn wrap_direction(&self, x: T) -> T {
        if !x.is_finite() {
            return x;
        }
        if self.aliases_within_domain() {
            let period = self.spatial_period();
            let lo = -T::one();
            if x >= lo && x < lo + period {
                return x;
            }
            let mut r = (x - lo) % period;
            if r < T::zero() {
                r = r + period;
            }
            let wrapped = lo + r;
            if wrapped >= lo + period {
                lo
            } else {
                wrapped
            }
        } else {
            x.max(-T::one()).min(T::one())
        }
    }

    /// Direction error `x̂ - x`, reduced to the shortest alias when the array
    /// cannot tell `x` from `x ± λ/d`.
    pub fn direction_error(&self, x_hat: T, x: T) -> T {
        let diff = x_hat - x;
        if self.aliases_within_domain() {
            let period = self.spatial_period();
            let half = period / T::lit(2.0);
            let mut r = (diff + half) % period;
            if r < T::zero() {
                r = r + period;
            }
            r - half
        } else {
            diff
        }
    }

    #[inline]
    pub(crate) fn phase_step(&self, x: T) -> T {
        -T::lit(2.0) * T::PI() * self.spacing * x
    }
}

/// Tracked quantity `ψ = [Re β, Im β, x]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelState<T> {
    pub beta_re: T,
    pub beta_im: T,
    pub x: T,
}

impl<T: Real> ChannelState<T> {
    /// Validated constructor; `x` must lie in `[-1, 1]`.
    pub fn new(beta: Complex<T>, x: T) -> Result<Self> {
        if !(x >= -T::one() && x <= T::one()) {
            return Err(Error::InvalidParameter(format!("direction {x:?} outside [-1, 1]")));
        }
        Ok(Self::from_beta(beta, x))
    }

    /// Unchecked constructor, used for perturbations in derivative checks.
    pub fn from_beta(beta: Complex<T>, x: T) -> Self {
        Self {
            beta_re: beta.re,
            beta_im: beta.im,
            x,
        }
    }

    pub fn beta(&self) -> Complex<T> {
        Complex::new(self.beta_re, self.beta_im)
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.beta_re, self.beta_im, self.x]
    }

    pub fn from_array(v: [T; 3]) -> Self {
        Self {
            beta_re: v[0],
            beta_im: v[1],
            x: v[2],
        }
    }

    /// `self + scale·dir`, coordinatewise.
    pub fn offset(&self, dir: [T; 3], scale: T) -> Self {
        Self {
            beta_re: self.beta_re + scale * dir[0],
            beta_im: self.beta_im + scale * dir[1],
            x: self.x + scale * dir[2],
        }
    }
}

/// Two analog training beams `W = [w1, w2]`, each `a(x̂ + δ_i)/√M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPair<T> {
    pub w1: Vec<Complex<T>>,
    pub w2: Vec<Complex<T>>,
    pub offsets: (T, T),
}

impl<T: Real> BeamPair<T> {
    /// `Wᴴv` for a length-M vector `v`.
    pub fn project(&self, v: &[Complex<T>]) -> [Complex<T>; 2] {
        [inner(&self.w1, v), inner(&self.w2, v)]
    }

    pub fn columns(&self) -> [&[Complex<T>]; 2] {
        [&self.w1, &self.w2]
    }
}

/// The two combiner outputs of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    pub y1: Complex<T>,
    pub y2: Complex<T>,
}

impl<T: Real> Observation<T> {
    pub fn new(y1: Complex<T>, y2: Complex<T>) -> Self {
        Self { y1, y2 }
    }

    pub fn to_array(&self) -> [Complex<T>; 2] {
        [self.y1, self.y2]
    }

    pub fn is_finite(&self) -> bool {
        self.y1.re.is_finite() && self.y1.im.is_finite() && self.y2.re.is_finite() && self.y2.im.is_finite()
    }
}

/// Steering vector `a(x)`.
pub fn steering<T: Real>(x: T, cfg: &ArrayConfig<T>) -> Vec<Complex<T>> {
    let step = cfg.phase_step(x);
    (0..cfg.num_antennas()).map(|m| cis(step * T::count(m))).collect()
}

/// Derivative `ȧ(x) = ∂a/∂x`; entry `m` is `-j·2π·(d/λ)·m·a_m(x)`.
pub fn steering_derivative<T: Real>(x: T, cfg: &ArrayConfig<T>) -> Vec<Complex<T>> {
    let step = cfg.phase_step(x);
    let k = -T::lit(2.0) * T::PI() * cfg.spacing();
    (0..cfg.num_antennas())
        .map(|m| {
            let mf = T::count(m);
            // d/dx e^{j·k·m·x} = j·k·m·e^{j·k·m·x}
            Complex::new(T::zero(), k * mf) * cis(step * mf)
        })
        .collect()
}

/// Single beamforming vector `a(x)/√M`.
pub fn beam<T: Real>(x: T, cfg: &ArrayConfig<T>) -> Vec<Complex<T>> {
    let scale = T::one() / T::count(cfg.num_antennas()).sqrt();
    steering(x, cfg).into_iter().map(|z| z * scale).collect()
}

/// Beam pair centered at `x_hat` with offsets `(δ₁, δ₂)`.
pub fn beam_pair<T: Real>(x_hat: T, delta1: T, delta2: T, cfg: &ArrayConfig<T>) -> BeamPair<T> {
    BeamPair {
        w1: beam(x_hat + delta1, cfg),
        w2: beam(x_hat + delta2, cfg),
        offsets: (delta1, delta2),
    }
}

/// One draw of `CN(0, variance)`: real and imaginary parts `N(0, variance/2)`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let sd = (variance.to_f64().unwrap_or(0.0) / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re * sd), T::lit(im * sd))
}

/// Noiseless mean `s·β·Wᴴa(x)` of the observation.
pub fn expected_observation<T: Real>(
    truth: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> Observation<T> {
    let a = steering(truth.x, cfg);
    let g = beams.project(&a);
    let gain = cfg.pilot() * truth.beta();
    Observation::new(gain * g[0], gain * g[1])
}

/// Draws the slot's two pilot observations against the true channel.
pub fn observe<T: Real, R: Rng + ?Sized>(
    truth: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    rng: &mut R,
) -> Observation<T> {
    let mean = expected_observation(truth, beams, cfg);
    let var = cfg.noise_power();
    if var == T::zero() {
        return mean;
    }
    let z1 = complex_gaussian(rng, var);
    let z2 = complex_gaussian(rng, var);
    Observation::new(mean.y1 + z1, mean.y2 + z2)
}

/// `log p(y | ψ, W) = -2·log(π σ₀²) - ‖y - sβWᴴa(x)‖²/σ₀²`.
pub fn log_likelihood<T: Real>(
    obs: &Observation<T>,
    psi: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> T {
    let mean = expected_observation(psi, beams, cfg);
    let resid = (obs.y1 - mean.y1).norm_sqr() + (obs.y2 - mean.y2).norm_sqr();
    let var = cfg.noise_power();
    -T::lit(2.0) * (T::PI() * var).ln() - resid / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(m: usize) -> ArrayConfig<f64> {
        ArrayConfig::from_snr_db(m, 0.5, Complex::new(0.5, 0.5), 5.0).unwrap()
    }

    #[test]
    fn rejects_invalid_arrays() {
        let s = Complex::new(1.0, 0.0);
        assert!(ArrayConfig::new(1, 0.5, s, 1.0).is_err());
        assert!(ArrayConfig::new(4, 0.0, s, 1.0).is_err());
        assert!(ArrayConfig::new(4, 0.5, Complex::new(0.0, 0.0), 1.0).is_err());
        assert!(ArrayConfig::new(4, 0.5, s, 0.0).is_err());
        assert!(ArrayConfig::new(4, 0.5, s, -1.0).is_err());
    }

    #[test]
    fn snr_db_sets_noise_power() {
        let c = cfg(32);
        assert_relative_eq!(c.noise_power(), 0.5 / 10f64.powf(0.5), max_relative = 1e-14);
        assert_relative_eq!(c.snr(), 10f64.powf(0.5), max_relative = 1e-14);
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        for m in [2, 7, 32] {
            for z in steering(0.0, &cfg(m)) {
                assert_eq!(z, Complex::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn endfire_two_element() {
        let a = steering(1.0, &cfg(2));
        assert_relative_eq!(a[0].re, 1.0);
        assert_relative_eq!(a[1].re, -1.0, epsilon = 1e-15);
        assert!(a[1].im.abs() < 1e-15);
    }

    #[test]
    fn dft_grid_is_orthogonal() {
        let c = cfg(32);
        for k in -8i32..8 {
            for l in -8i32..8 {
                if k == l {
                    continue;
                }
                let ak = steering(2.0 * k as f64 / 32.0, &c);
                let al = steering(2.0 * l as f64 / 32.0, &c);
                // explicit summation oracle
                let mut acc = Complex::new(0.0, 0.0);
                for m in 0..32 {
                    acc += ak[m].conj() * al[m];
                }
                assert!(acc.norm() < 1e-12, "k={k} l={l} -> {acc}");
            }
        }
    }

    #[test]
    fn steering_norm_and_conjugate_symmetry() {
        let c = cfg(13);
        for i in 0..=100 {
            let x = -1.0 + 2.0 * i as f64 / 100.0;
            let a = steering(x, &c);
            assert_relative_eq!(crate::scalar::norm_sqr(&a), 13.0, max_relative = 1e-12);
            let b = steering(-x, &c);
            for (p, q) in a.iter().zip(&b) {
                assert_relative_eq!(p.re, q.re, epsilon = 1e-12);
                assert_relative_eq!(p.im, -q.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let c = cfg(32);
        let (x, h) = (0.3, 1e-6);
        let d = steering_derivative(x, &c);
        assert_eq!(d[0], Complex::new(0.0, 0.0));
        let ap = steering(x + h, &c);
        let am = steering(x - h, &c);
        let mut err = 0.0;
        for m in 0..32 {
            err += ((ap[m] - am[m]) / (2.0 * h) - d[m]).norm_sqr();
        }
        let norm = crate::scalar::norm_sqr(&d);
        assert!(err.sqrt() < 1e-6 * norm.sqrt());
        let expected: f64 = (0..32).map(|m| (std::f64::consts::PI * m as f64).powi(2)).sum();
        assert_relative_eq!(norm, expected, max_relative = 1e-12);
        let other = crate::scalar::norm_sqr(&steering_derivative(-0.7, &c));
        assert_relative_eq!(other, expected, max_relative = 1e-12);
    }

    #[test]
    fn beams_are_constant_modulus() {
        let c = cfg(16);
        let bp = beam_pair(0.1, -0.05, 0.07, &c);
        for w in bp.columns() {
            for z in w {
                assert_relative_eq!(z.norm(), 0.25, max_relative = 1e-12);
            }
            assert_relative_eq!(crate::scalar::norm_sqr(w), 1.0, max_relative = 1e-12);
        }
        assert_eq!(bp.offsets, (-0.05, 0.07));
    }

    #[test]
    fn aligned_beam_has_full_gain() {
        let c = cfg(32);
        let bp = beam_pair(0.2, 0.0, 0.0, &c);
        let g = bp.project(&steering(0.2, &c));
        assert_relative_eq!(g[0].re, 32f64.sqrt(), max_relative = 1e-12);
        assert!(g[0].im.abs() < 1e-12);
        assert_eq!(bp.w1, bp.w2);
    }

    #[test]
    fn noiseless_observation_is_deterministic() {
        let c = cfg(32).with_noise_power(0.0);
        let beta = Complex::new(0.8, -0.3);
        let truth = ChannelState::new(beta, 0.2).unwrap();
        let bp = beam_pair(0.2, 0.0, 0.0, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = observe(&truth, &bp, &c, &mut rng);
        let expected = beta * c.pilot() * 32f64.sqrt();
        assert_relative_eq!((y.y1 - expected).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((y.y2 - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_moments() {
        let c = ArrayConfig::new(8, 0.5, Complex::new(1.0, 0.0), 1.0).unwrap();
        let truth = ChannelState::new(Complex::new(0.0, 0.0), 0.0).unwrap();
        let bp = beam_pair(0.0, -0.1, 0.1, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let (mut s1, mut s2) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        let (mut v1, mut v2) = (0.0, 0.0);
        for _ in 0..n {
            let y = observe(&truth, &bp, &c, &mut rng);
            s1 += y.y1;
            s2 += y.y2;
            v1 += y.y1.norm_sqr();
            v2 += y.y2.norm_sqr();
        }
        let nf = n as f64;
        assert!((s1 / nf).norm() < 0.02 && (s2 / nf).norm() < 0.02);
        assert!((v1 / nf - 1.0).abs() < 0.03 && (v2 / nf - 1.0).abs() < 0.03);
    }

    #[test]
    fn observation_mean_matches_model() {
        let c = cfg(16);
        let truth = ChannelState::new(Complex::new(0.6, 0.9), -0.35).unwrap();
        let bp = beam_pair(-0.3, -0.04, 0.09, &c);
        let mean = expected_observation(&truth, &bp, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut acc = [Complex::new(0.0, 0.0); 2];
        for _ in 0..n {
            let y = observe(&truth, &bp, &c, &mut rng);
            acc[0] += y.y1;
            acc[1] += y.y2;
        }
        // each complex component has variance σ₀²/2 per real part
        let se = (c.noise_power() / 2.0 / n as f64).sqrt();
        for (s, m) in acc.iter().zip(mean.to_array()) {
            let d = s / n as f64 - m;
            assert!(d.re.abs() < 3.0 * se && d.im.abs() < 3.0 * se, "{d}");
        }
    }

    #[test]
    fn likelihood_peak_and_shift_invariance() {
        let c = cfg(32);
        let truth = ChannelState::new(Complex::new(0.8, 0.3), 0.2).unwrap();
        let bp = beam_pair(0.2, -1.0 / 24.0, 1.0 / 24.0, &c);
        let y = expected_observation(&truth, &bp, &c);
        let peak = log_likelihood(&y, &truth, &bp, &c);
        assert_relative_eq!(
            peak,
            -2.0 * (std::f64::consts::PI * c.noise_power()).ln(),
            max_relative = 1e-12
        );
        for k in 0..3 {
            for sgn in [-1.0, 1.0] {
                let mut dir = [0.0; 3];
                dir[k] = sgn;
                let p = truth.offset(dir, 1e-3);
                assert!(log_likelihood(&y, &p, &bp, &c) < peak);
            }
        }
        // shifting observation and mean together leaves the residual unchanged
        let shift = Complex::new(0.4, -1.1);
        let noisy = Observation::new(y.y1 + Complex::new(0.1, 0.2), y.y2 - Complex::new(0.3, 0.0));
        let base = log_likelihood(&noisy, &truth, &bp, &c);
        let shifted_obs = Observation::new(noisy.y1 + shift, noisy.y2 + shift);
        let mean = expected_observation(&truth, &bp, &c);
        let r = (shifted_obs.y1 - (mean.y1 + shift)).norm_sqr() + (shifted_obs.y2 - (mean.y2 + shift)).norm_sqr();
        let shifted = -2.0 * (std::f64::consts::PI * c.noise_power()).ln() - r / c.noise_power();
        assert_relative_eq!(base, shifted, max_relative = 1e-12);
    }

    #[test]
    fn wrapping_at_half_wavelength() {
        let c = cfg(32);
        assert_relative_eq!(c.wrap_direction(1.01), -0.99, epsilon = 1e-12);
        assert_relative_eq!(c.wrap_direction(-1.02), 0.98, epsilon = 1e-12);
        assert_eq!(c.wrap_direction(0.3), 0.3);
        assert_relative_eq!(c.direction_error(-0.995, 0.995), 0.01, epsilon = 1e-12);
        assert_relative_eq!(c.direction_error(0.1, 0.3), -0.2, epsilon = 1e-12);
        let narrow = ArrayConfig::new(8, 0.25, Complex::new(1.0, 0.0), 1.0).unwrap();
        assert_eq!(narrow.wrap_direction(1.3), 1.0);
        assert_eq!(narrow.wrap_direction(-1.3), -1.0);
        assert_relative_eq!(narrow.direction_error(-0.995, 0.995), -1.99, epsilon = 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let c = ArrayConfig::<f32>::from_snr_db(8, 0.5, Complex::new(0.5, 0.5), 5.0).unwrap();
        let a = steering(0.25f32, &c);
        assert!((crate::scalar::norm_sqr(&a) - 8.0).abs() < 1e-4);
    }
}
