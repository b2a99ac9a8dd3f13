//! Property tests over randomly drawn arrays, channels and beams.

use beamtrack::analysis::{mean_field, noise_direction};
use beamtrack::array::{
    beam_pair, expected_observation, log_likelihood, observe, steering, ArrayConfig, ChannelState, Observation,
};
use beamtrack::baselines::{Algorithm, AnyTracker};
use beamtrack::estimation::{crlb_direction, fisher, optimal_pair, optimize_beam_offsets, OffsetSearchGrid};
use beamtrack::harness::metrics::achievable_rate;
use beamtrack::scenario::{dynamic_step, DynamicState};
use beamtrack::tracker::{newton_direction, rbct_update, step_size, BeamTracker, StepSchedule, TrackerState};
use nalgebra::Matrix3;
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn array(m: usize, spacing: f64, snr_db: f64) -> ArrayConfig<f64> {
    ArrayConfig::from_snr_db(m, spacing, Complex::new(0.5, 0.5), snr_db).unwrap()
}

prop_compose! {
    fn channel()(mag in 0.2f64..2.0, phase in 0.0f64..std::f64::consts::TAU, x in -0.95f64..0.95) -> ChannelState<f64> {
        ChannelState::new(Complex::from_polar(mag, phase), x).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_norm_and_conjugate_symmetry(m in 2usize..80, spacing in 0.1f64..1.0, x in -1.0f64..=1.0) {
        let c = array(m, spacing, 5.0);
        let a = steering(x, &c);
        let b = steering(-x, &c);
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - m as f64).abs() < 1e-9 * m as f64);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u.conj() - v).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_likelihood_peaks_at_truth(m in 4usize..48, psi in channel()) {
        let c = array(m, 0.5, 5.0);
        let beams = optimal_pair(psi.x, &c);
        let y = expected_observation(&psi, &beams, &c);
        let quiet = c.with_noise_power(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        prop_assert_eq!(observe(&psi, &beams, &quiet, &mut rng), y);
        let peak = log_likelihood(&y, &psi, &beams, &c);
        for k in 0..3 {
            for h in [-1e-3, 1e-3] {
                let mut v = psi.to_array();
                v[k] += h;
                prop_assert!(log_likelihood(&y, &ChannelState::from_array(v), &beams, &c) < peak);
            }
        }
    }

    #[test]
    fn fisher_is_psd(m in 2usize..64, psi in channel(), d1 in -0.2f64..0.2, d2 in -0.2f64..0.2) {
        let c = array(m, 0.5, 5.0);
        let f = fisher(&psi, &beam_pair(psi.x, d1, d2, &c), &c).0;
        let mat = Matrix3::from_fn(|i, j| 0.5 * (f[i][j] + f[j][i]));
        let scale = mat.abs().max().max(1.0);
        for l in mat.symmetric_eigenvalues().iter() {
            prop_assert!(*l >= -1e-10 * scale, "eigenvalue {l}");
        }
    }

    #[test]
    fn optimal_pair_crlb_is_translation_invariant(m in 4usize..64, psi in channel(), shift in -0.5f64..0.5) {
        let c = array(m, 0.5, 5.0);
        let moved = ChannelState::from_beta(psi.beta(), (psi.x + shift).clamp(-1.0, 1.0));
        let a = crlb_direction(&psi, &optimal_pair(psi.x, &c), &c).unwrap();
        let b = crlb_direction(&moved, &optimal_pair(moved.x, &c), &c).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn update_direction_splits_into_drift_and_noise(
        m in 4usize..40,
        truth in channel(),
        dx in -0.01f64..0.01,
        db in -0.1f64..0.1,
        seed in any::<u64>(),
    ) {
        let c = array(m, 0.5, 5.0);
        let est = truth.offset([db, -db, dx], 1.0);
        let beams = optimal_pair(est.x, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = [beamtrack::array::complex_gaussian(&mut rng, c.noise_power()), beamtrack::array::complex_gaussian(&mut rng, c.noise_power())];
        let mean = expected_observation(&truth, &beams, &c);
        let y = Observation::new(mean.y1 + z[0], mean.y2 + z[1]);
        let dir = newton_direction(&est, &y, &beams, &c).unwrap();
        let f = mean_field(&est, &truth, &beams, &c).unwrap();
        let n = noise_direction(z, &est, &beams, &c).unwrap();
        for k in 0..3 {
            let tol = 1e-10 * (1.0 + dir[k].abs());
            prop_assert!((dir[k] - f[k] - n[k]).abs() < tol, "k={k}: {} vs {}", dir[k], f[k] + n[k]);
        }
    }

    #[test]
    fn noiseless_update_at_truth_is_identity(m in 4usize..64, psi in channel(), n0 in 0usize..10) {
        let c = array(m, 0.5, 5.0).with_noise_power(0.0);
        let state = TrackerState::new(psi, StepSchedule::diminishing(1.0, n0).unwrap(), &c);
        let beams = optimal_pair(psi.x, &c);
        let y = expected_observation(&psi, &beams, &c);
        let next = rbct_update(&state, &y, &beams, &c).unwrap();
        let (a, b) = (next.estimate.to_array(), psi.to_array());
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-12);
        }
        prop_assert_eq!(next.slot, 1);
    }

    #[test]
    fn estimates_stay_in_domain(m in 4usize..40, psi in channel(), seed in any::<u64>(), snr in -10.0f64..10.0) {
        let c = array(m, 0.5, snr);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = TrackerState::new(psi.offset([0.0, 0.0, 0.03], 1.0), StepSchedule::constant(1.0).unwrap(), &c);
        for _ in 0..50 {
            let beams = optimal_pair(state.estimate.x, &c);
            let y = observe(&psi, &beams, &c, &mut rng);
            state = rbct_update(&state, &y, &beams, &c).unwrap_or_else(|_| state.hold());
            prop_assert!((-1.0..=1.0).contains(&state.estimate.x));
        }
    }

    #[test]
    fn diminishing_steps_decrease(alpha in 0.1f64..5.0, n0 in 0usize..50) {
        let s = StepSchedule::diminishing(alpha, n0).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..200 {
            let a = step_size(n, &s);
            prop_assert!(a < prev && a > 0.0);
            prev = a;
        }
    }

    #[test]
    fn optimizer_beats_every_grid_point(m in 4usize..24, psi in channel()) {
        let c = array(m, 0.5, 5.0);
        let base = OffsetSearchGrid::default_for(&c);
        let grid = OffsetSearchGrid::new(base.lo, base.hi, 25).unwrap();
        let opt = optimize_beam_offsets(&psi, &c, &grid).unwrap();
        for d1 in grid.points() {
            for d2 in grid.points() {
                if let Ok(v) = crlb_direction(&psi, &beam_pair(psi.x, d1, d2, &c), &c) {
                    prop_assert!(opt.crlb <= v * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn dynamic_angle_stays_in_band(omega in 0.0f64..=0.04, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = DynamicState::new(0.0, omega, 15.0, &mut rng).unwrap();
        let bound = (std::f64::consts::FRAC_PI_3).sin();
        for _ in 0..400 {
            s = dynamic_step(&s, &mut rng);
            prop_assert!(s.channel_state().x.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn rate_never_exceeds_capacity(psi in channel(), x_hat in -1.0f64..1.0, snr in 0.01f64..100.0) {
        let c = array(32, 0.5, 5.0);
        let (r, cap) = achievable_rate(&psi, x_hat, &c, snr);
        prop_assert!(r >= 0.0 && r <= cap * (1.0 + 1e-9));
    }

    #[test]
    fn every_tracker_spends_two_pilots_per_slot(m in 4usize..24, seed in any::<u64>()) {
        let c = array(m, 0.5, 5.0);
        let truth = ChannelState::new(Complex::new(1.0, 0.0), 0.3).unwrap();
        let sched = StepSchedule::diminishing(1.0, 0).unwrap();
        for alg in Algorithm::ALL {
            let mut t = AnyTracker::new(alg, truth, sched, &c, 4 * m);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..(m + 3) {
                prop_assert_eq!(t.advance(&truth, &c, &mut rng).pilots, 2);
            }
        }
    }
}
