//! Rate metrics and streaming statistics.

use crate::array::{steering, ArrayConfig, ChannelState};
use crate::scalar::{inner, Real};

/// Spectral efficiency of beamforming toward `x_hat`, and the aligned-beam
/// capacity it is compared against. Both use the true coefficient.
pub fn achievable_rate<T: Real>(truth: &ChannelState<T>, x_hat: T, cfg: &ArrayConfig<T>, data_snr: T) -> (T, T) {
    let m = T::count(cfg.num_antennas());
    let gain = truth.beta().norm_sqr();
    let align = inner(&steering(x_hat, cfg), &steering(truth.x, cfg)).norm_sqr();
    let rate = (T::one() + data_snr * gain * align / m).log2();
    let capacity = (T::one() + data_snr * gain * m).log2();
    (rate, capacity)
}

/// Welford mean/variance accumulator with an associative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// NaN when empty.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance; NaN below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn cfg() -> ArrayConfig<f64> {
        ArrayConfig::from_snr_db(32, 0.5, Complex::new(0.5, 0.5), 5.0).unwrap()
    }

    #[test]
    fn aligned_beam_reaches_capacity() {
        let c = cfg();
        let psi = ChannelState::new(Complex::new(0.3, -0.9), 0.37).unwrap();
        let (r, cap) = achievable_rate(&psi, 0.37, &c, 3.0);
        assert!((r - cap).abs() < 1e-12);
        assert!((cap - (1.0 + 3.0 * 0.9 * 32.0f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn null_gives_zero_rate() {
        let c = cfg();
        let psi = ChannelState::new(Complex::new(1.0, 0.0), 0.1).unwrap();
        // First null of the Dirichlet kernel at Δx = 1/(Md) = 1/16.
        let dirichlet = |dx: f64| {
            let p = std::f64::consts::PI * 0.5 * dx;
            ((32.0 * p).sin() / p.sin()).abs()
        };
        let a = inner(&steering(0.1 + 1.0 / 16.0, &c), &steering(0.1, &c)).norm();
        assert!(a < 1e-9 * 32.0 && dirichlet(1.0 / 16.0) < 1e-9 * 32.0);
        let (r, _) = achievable_rate(&psi, 0.1 + 1.0 / 8.0, &c, 3.0);
        assert!(r.abs() < 1e-9);
        let (r, _) = achievable_rate(&psi, 0.1 + 0.01, &c, 3.0);
        let expected = (1.0 + 3.0 * dirichlet(0.01).powi(2) / 32.0).log2();
        assert!((r - expected).abs() < 1e-10);
    }

    #[test]
    fn rate_symmetric_in_error() {
        let c = cfg();
        let psi = ChannelState::new(Complex::new(0.7, 0.1), -0.2).unwrap();
        for dx in [0.001, 0.02, 0.05] {
            let (a, _) = achievable_rate(&psi, -0.2 + dx, &c, 3.16);
            let (b, _) = achievable_rate(&psi, -0.2 - dx, &c, 3.16);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn welford_merge_matches_direct() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.13 - 4.0).collect();
        let mut all = RunningStats::default();
        data.iter().for_each(|&v| all.push(v));
        let mut parts = RunningStats::default();
        for chunk in data.chunks(77) {
            let mut s = RunningStats::default();
            chunk.iter().for_each(|&v| s.push(v));
            parts.merge(&s);
        }
        let mean = data.iter().sum::<f64>() / 1000.0;
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
        assert_eq!(parts.count(), 1000);
        assert!((all.mean() - mean).abs() < 1e-12 && (parts.mean() - mean).abs() < 1e-12);
        assert!((all.variance() - var).abs() < 1e-9 && (parts.variance() - var).abs() < 1e-9);
        assert!(RunningStats::default().mean().is_nan());
    }
}
