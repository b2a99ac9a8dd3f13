//! Mean-field diagnostics of the RBCT recursion.
//!
//! The update direction splits into a deterministic drift `f(ψ̂, ψ)` (its
//! conditional mean given the truth) and a zero-mean effective noise `ẑ`
//! with covariance `I(ψ̂, W)⁻¹`. Stable points are zeros of `f` with a
//! negative-definite Jacobian; the truth is one of them with Jacobian `-I`.

use std::fmt;

use num_complex::Complex;
use rand::Rng;

use crate::array::{beam_pair, complex_gaussian, steering, ArrayConfig, BeamPair, ChannelState};
use crate::error::{Error, Result};
use crate::estimation::{fisher_from, mat_vec, Projections};
use crate::scalar::{inner, Real};
use crate::tracker::BETA_FLOOR;

/// Default central-difference step for [`mean_field_jacobian`].
pub const JACOBIAN_STEP: f64 = 1e-5;

/// How the training beams respond to a perturbed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamPolicy {
    /// Beams stay as given.
    #[default]
    Fixed,
    /// Beams are re-centered on the perturbed `x̂` with the same offsets.
    Follow,
}

fn inverse_fisher<T: Real>(psi_hat: &ChannelState<T>, p: &Projections<T>, cfg: &ArrayConfig<T>) -> Result<[[T; 3]; 3]> {
    if !(psi_hat.beta().norm() > T::lit(BETA_FLOOR)) {
        return Err(Error::SingularUpdate("channel coefficient estimate below floor"));
    }
    if !p.gram_gap().1 {
        return Err(Error::SingularUpdate("training beams are degenerate"));
    }
    fisher_from(psi_hat.beta(), p, cfg)
        .inverse()
        .ok_or(Error::SingularUpdate("Fisher matrix not invertible"))
}

/// Mean drift `f(ψ̂, ψ) = E[I⁻¹·∇log p | ψ]`.
///
/// With `r̄ = βWᴴa(x) - β̂ĝ`, `E[∇log p] = (2|s|²/σ₀²)·[Re{ĝᴴr̄}, Im{ĝᴴr̄}, Re{êᴴr̄}]`.
pub fn mean_field<T: Real>(
    psi_hat: &ChannelState<T>,
    psi_true: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> Result<[T; 3]> {
    let p = Projections::at(psi_hat.x, beams, cfg);
    let inv = inverse_fisher(psi_hat, &p, cfg)?;
    let g_true = beams.project(&steering(psi_true.x, cfg));
    let beta_hat = psi_hat.beta();
    let r = [
        psi_true.beta() * g_true[0] - beta_hat * p.g[0],
        psi_true.beta() * g_true[1] - beta_hat * p.g[1],
    ];
    let e = p.e(beta_hat);
    let gr = inner(&p.g, &r);
    let er = inner(&e, &r);
    let k = T::lit(2.0) * cfg.pilot().norm_sqr() / cfg.noise_power();
    Ok(mat_vec(&inv, [k * gr.re, k * gr.im, k * er.re]))
}

/// Effective noise `ẑ = I⁻¹·(2/σ₀²)·[Re{s*ĝᴴz}, Im{s*ĝᴴz}, Re{s*êᴴz}]` for one noise draw `z`.
pub fn noise_direction<T: Real>(
    z: [Complex<T>; 2],
    psi_hat: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> Result<[T; 3]> {
    let p = Projections::at(psi_hat.x, beams, cfg);
    let inv = inverse_fisher(psi_hat, &p, cfg)?;
    Ok(mat_vec(&inv, noise_score(z, psi_hat.beta(), &p, cfg)))
}

fn noise_score<T: Real>(z: [Complex<T>; 2], beta_hat: Complex<T>, p: &Projections<T>, cfg: &ArrayConfig<T>) -> [T; 3] {
    let s = cfg.pilot().conj();
    let gz = s * inner(&p.g, &z);
    let ez = s * inner(&p.e(beta_hat), &z);
    let k = T::lit(2.0) / cfg.noise_power();
    [k * gz.re, k * gz.im, k * ez.re]
}

/// Draws `trials` effective-noise vectors at `ψ̂`.
pub fn effective_noise_samples<T: Real, R: Rng + ?Sized>(
    psi_hat: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<[T; 3]>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let p = Projections::at(psi_hat.x, beams, cfg);
    let inv = inverse_fisher(psi_hat, &p, cfg)?;
    let var = cfg.noise_power();
    Ok((0..trials)
        .map(|_| {
            let z = [complex_gaussian(rng, var), complex_gaussian(rng, var)];
            mat_vec(&inv, noise_score(z, psi_hat.beta(), &p, cfg))
        })
        .collect())
}

/// Central-difference Jacobian `∂f/∂ψ̂ᵀ` with the default step.
pub fn mean_field_jacobian<T: Real>(
    psi_hat: &ChannelState<T>,
    psi_true: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    policy: BeamPolicy,
) -> Result<[[T; 3]; 3]> {
    mean_field_jacobian_with_step(psi_hat, psi_true, beams, cfg, policy, T::lit(JACOBIAN_STEP))
}

pub fn mean_field_jacobian_with_step<T: Real>(
    psi_hat: &ChannelState<T>,
    psi_true: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    policy: BeamPolicy,
    h: T,
) -> Result<[[T; 3]; 3]> {
    let drift_at = |point: ChannelState<T>| match policy {
        BeamPolicy::Fixed => mean_field(&point, psi_true, beams, cfg),
        BeamPolicy::Follow => {
            let moved = beam_pair(point.x, beams.offsets.0, beams.offsets.1, cfg);
            mean_field(&point, psi_true, &moved, cfg)
        }
    };
    let mut jac = [[T::zero(); 3]; 3];
    for k in 0..3 {
        let mut dir = [T::zero(); 3];
        dir[k] = T::one();
        let plus = drift_at(psi_hat.offset(dir, h))?;
        let minus = drift_at(psi_hat.offset(dir, -h))?;
        for i in 0..3 {
            jac[i][k] = (plus[i] - minus[i]) / (T::lit(2.0) * h);
        }
    }
    Ok(jac)
}

/// Eigenvalues of `(J + Jᵀ)/2`, ascending.
pub fn symmetrized_eigenvalues<T: Real>(jac: &[[T; 3]; 3]) -> [f64; 3] {
    let m = nalgebra::Matrix3::from_fn(|i, j| {
        let a = jac[i][j].to_f64().unwrap_or(f64::NAN);
        let b = jac[j][i].to_f64().unwrap_or(f64::NAN);
        0.5 * (a + b)
    });
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    [eig[0], eig[1], eig[2]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityTolerance {
    pub drift: f64,
    pub eig: f64,
}

impl Default for StabilityTolerance {
    fn default() -> Self {
        Self { drift: 1e-6, eig: 1e-3 }
    }
}

/// Result of checking whether an estimate is a stable point of the recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StablePointReport {
    pub drift: [f64; 3],
    pub drift_norm: f64,
    pub jacobian: [[f64; 3]; 3],
    /// Largest eigenvalue of the symmetrized Jacobian.
    pub max_sym_eigenvalue: f64,
    pub is_stable: bool,
}

impl fmt::Display for StablePointReport {
    /// Flat `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "drift_re_beta={:e}", self.drift[0])?;
        writeln!(f, "drift_im_beta={:e}", self.drift[1])?;
        writeln!(f, "drift_x={:e}", self.drift[2])?;
        writeln!(f, "drift_norm={:e}", self.drift_norm)?;
        for (i, row) in self.jacobian.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(f, "jacobian_{}{}={:.9}", i + 1, j + 1, v)?;
            }
        }
        writeln!(f, "max_sym_eigenvalue={:.9}", self.max_sym_eigenvalue)?;
        writeln!(f, "is_stable={}", self.is_stable)
    }
}

/// Evaluates the drift and its Jacobian at `ψ̂` and applies the thresholds.
pub fn certify_stable_point<T: Real>(
    psi_hat: &ChannelState<T>,
    psi_true: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
    policy: BeamPolicy,
    tol: StabilityTolerance,
) -> Result<StablePointReport> {
    let drift = mean_field(psi_hat, psi_true, beams, cfg)?.map(|v| v.to_f64().unwrap_or(f64::NAN));
    let jac = mean_field_jacobian(psi_hat, psi_true, beams, cfg, policy)?;
    let jacobian = jac.map(|row| row.map(|v| v.to_f64().unwrap_or(f64::NAN)));
    let drift_norm = drift.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eig = symmetrized_eigenvalues(&jac);
    let max_sym_eigenvalue = eig[2];
    let is_stable = drift_norm < tol.drift && eig.iter().all(|&l| l < -tol.eig);
    Ok(StablePointReport {
        drift,
        drift_norm,
        jacobian,
        max_sym_eigenvalue,
        is_stable,
    })
}
