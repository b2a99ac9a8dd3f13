//! Fisher information of one slot's pilot pair, the score of the
//! observation likelihood, the direction CRLB, and the search for the
//! CRLB-minimizing training offsets.

use num_complex::Complex;

use crate::array::{beam_pair, steering, steering_derivative, ArrayConfig, BeamPair, ChannelState, Observation};
use crate::error::{Error, Result};
use crate::scalar::{inner, Real};

/// Relative floor below which `‖g‖²‖ė‖² - |gᴴė|²` counts as zero.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Beam-domain responses at a point: `g = Wᴴa(x)` and `ė = Wᴴȧ(x)`.
///
/// `ė` excludes the channel coefficient; `e = β·ė`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Projections<T> {
    pub g: [Complex<T>; 2],
    pub e_dot: [Complex<T>; 2],
}

impl<T: Real> Projections<T> {
    pub fn at(x: T, beams: &BeamPair<T>, cfg: &ArrayConfig<T>) -> Self {
        let a = steering(x, cfg);
        let ad = steering_derivative(x, cfg);
        Self {
            g: beams.project(&a),
            e_dot: beams.project(&ad),
        }
    }

    pub fn g_norm_sqr(&self) -> T {
        self.g[0].norm_sqr() + self.g[1].norm_sqr()
    }

    pub fn e_dot_norm_sqr(&self) -> T {
        self.e_dot[0].norm_sqr() + self.e_dot[1].norm_sqr()
    }

    /// `gᴴė`.
    pub fn cross(&self) -> Complex<T> {
        self.g[0].conj() * self.e_dot[0] + self.g[1].conj() * self.e_dot[1]
    }

    /// `e = β·ė`.
    pub fn e(&self, beta: Complex<T>) -> [Complex<T>; 2] {
        [beta * self.e_dot[0], beta * self.e_dot[1]]
    }

    /// `‖g‖²‖ė‖² - |gᴴė|²` and the relative-floor test on it.
    pub fn gram_gap(&self) -> (T, bool) {
        let gg = self.g_norm_sqr();
        let ee = self.e_dot_norm_sqr();
        let gap = gg * ee - self.cross().norm_sqr();
        let ok = gg > T::zero() && ee > T::zero() && gap > T::lit(DEGENERACY_FLOOR) * gg * ee;
        (gap, ok)
    }
}

/// Symmetric 3×3 Fisher information matrix over `ψ = [Re β, Im β, x]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix<T>(pub [[T; 3]; 3]);

impl<T: Real> FisherMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[i][j]
    }

    pub fn entries(&self) -> &[[T; 3]; 3] {
        &self.0
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<[[T; 3]; 3]> {
        let m = &self.0;
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = adj[i][j] / det;
            }
        }
        Some(out)
    }

    pub fn mul_vec(&self, v: [T; 3]) -> [T; 3] {
        mat_vec(&self.0, v)
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|v| *v = *v * k);
        Self(out)
    }
}

pub(crate) fn mat_vec<T: Real>(m: &[[T; 3]; 3], v: [T; 3]) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

/// Gradient of the log-likelihood with respect to `ψ`, evaluated at `psi`.
///
/// With `r = y - sβĝ`: `(2/σ₀²)·[Re{s*ĝᴴr}, Im{s*ĝᴴr}, Re{s*êᴴr}]`.
pub fn score<T: Real>(
    obs: &Observation<T>,
    psi: &ChannelState<T>,
    beams: &BeamPair<T>,
    cfg: &ArrayConfig<T>,
) -> [T; 3] {
    let p = Projections::at(psi.x, beams, cfg);
    score_from(obs, psi, &p, cfg)
}

pub(crate) fn score_from<T: Real>(
    obs: &Observation<T>,
    psi: &ChannelState<T>,
    p: &Projections<T>,
    cfg: &ArrayConfig<T>,
) -> [T; 3] {
    let s = cfg.pilot();
    let beta = psi.beta();
    let y = obs.to_array();
    let r = [y[0] - s * beta * p.g[0], y[1] - s * beta * p.g[1]];
    let e = p.e(beta);
    let gr = s.conj() * inner(&p.g, &r);
    let er = s.conj() * inner(&e, &r);
    let k = T::lit(2.0) / cfg.noise_power();
    [k * gr.re, k * gr.im, k * er.re]
}

/// Fisher information `I(ψ, W)` of one slot's two pilots.
pub fn fisher<T: Real>(psi: &ChannelState<T>, beams: &BeamPair<T>, cfg: &ArrayConfig<T>) -> FisherMatrix<T> {
    let p = Projections::at(psi.x, beams, cfg);
    fisher_from(psi.beta(), &p, cfg)
}

pub(crate) fn fisher_from<T: Real>(beta: Complex<T>, p: &Projections<T>, cfg: &ArrayConfig<T>) -> FisherMatrix<T> {
    let k = T::lit(2.0) * cfg.pilot().norm_sqr() / cfg.noise_power();
    let gg = p.g_norm_sqr();
    let ee = beta.norm_sqr() * p.e_dot_norm_sqr();
    let c = beta * p.cross();
    FisherMatrix([
        [k * gg, T::zero(), k * c.re],
        [T::zero(), k * gg, k * c.im],
        [k * c.re, k * c.im, k * ee],
    ])
}

/// `[I(ψ, W)⁻¹]₃,₃`, the CRLB of the direction for one slot.
pub fn crlb_direction<T: Real>(psi: &ChannelState<T>, beams: &BeamPair<T>, cfg: &ArrayConfig<T>) -> Result<T> {
    let p = Projections::at(psi.x, beams, cfg);
    crlb_from(psi.beta(), &p, cfg)
}

fn crlb_from<T: Real>(beta: Complex<T>, p: &Projections<T>, cfg: &ArrayConfig<T>) -> Result<T> {
    let b2 = beta.norm_sqr();
    let (gap, ok) = p.gram_gap();
    if !ok || !(b2 > T::zero()) {
        return Err(Error::DegenerateDesign);
    }
    let scale = cfg.noise_power() / (T::lit(2.0) * cfg.pilot().norm_sqr() * b2);
    Ok(scale * p.g_norm_sqr() / gap)
}

/// Search region for the training offsets `(δ₁, δ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetSearchGrid<T> {
    pub lo: T,
    pub hi: T,
    pub steps: usize,
}

impl<T: Real> OffsetSearchGrid<T> {
    pub fn new(lo: T, hi: T, steps: usize) -> Result<Self> {
        if !(lo < hi) || steps < 3 {
            return Err(Error::InvalidParameter(format!(
                "offset grid needs lo < hi and steps >= 3 (got {lo:?}, {hi:?}, {steps})"
            )));
        }
        Ok(Self { lo, hi, steps })
    }

    /// `[-2/(M·d/λ), 2/(M·d/λ)]` on 201 points.
    pub fn default_for(cfg: &ArrayConfig<T>) -> Self {
        let half = T::lit(2.0) * cfg.mainlobe_half_width();
        Self {
            lo: -half,
            hi: half,
            steps: 201,
        }
    }

    pub fn step(&self) -> T {
        (self.hi - self.lo) / T::count(self.steps - 1)
    }

    pub fn point(&self, i: usize) -> T {
        self.lo + self.step() * T::count(i)
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.steps).map(move |i| self.point(i))
    }
}

/// Minimizer of the direction CRLB over the offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetOptimum<T> {
    pub delta1: T,
    pub delta2: T,
    pub crlb: T,
}

impl<T: Copy> OffsetOptimum<T> {
    /// The column-swapped optimum, which has the same objective.
    pub fn mirrored(&self) -> (T, T) {
        (self.delta2, self.delta1)
    }
}

/// Responses of a single beam steered at `x + δ`: `(a(x+δ)ᴴa(x)/√M, a(x+δ)ᴴȧ(x)/√M)`.
struct SingleBeam<T> {
    g: Complex<T>,
    e_dot: Complex<T>,
}

struct ResponseTable<'a, T> {
    a: Vec<Complex<T>>,
    ad: Vec<Complex<T>>,
    x: T,
    cfg: &'a ArrayConfig<T>,
}

impl<'a, T: Real> ResponseTable<'a, T> {
    fn new(x: T, cfg: &'a ArrayConfig<T>) -> Self {
        Self {
            a: steering(x, cfg),
            ad: steering_derivative(x, cfg),
            x,
            cfg,
        }
    }

    fn beam(&self, delta: T) -> SingleBeam<T> {
        let w = crate::array::beam(self.x + delta, self.cfg);
        SingleBeam {
            g: inner(&w, &self.a),
            e_dot: inner(&w, &self.ad),
        }
    }
}

fn pair_projections<T: Real>(b1: &SingleBeam<T>, b2: &SingleBeam<T>) -> Projections<T> {
    Projections {
        g: [b1.g, b2.g],
        e_dot: [b1.e_dot, b2.e_dot],
    }
}

/// Grid search for the offsets minimizing [`crlb_direction`], followed by a
/// compass refinement that halves the step ten times around the best cell.
///
/// Ties on the grid go to the lexicographically smallest `(δ₁, δ₂)`.
pub fn optimize_beam_offsets<T: Real>(
    psi: &ChannelState<T>,
    cfg: &ArrayConfig<T>,
    grid: &OffsetSearchGrid<T>,
) -> Result<OffsetOptimum<T>> {
    let beta = psi.beta();
    if !(beta.norm_sqr() > T::zero()) {
        return Err(Error::InvalidParameter("channel coefficient must be non-zero".into()));
    }
    let table = ResponseTable::new(psi.x, cfg);
    let beams: Vec<SingleBeam<T>> = grid.points().map(|d| table.beam(d)).collect();

    let mut best: Option<(usize, usize, T)> = None;
    for (i, b1) in beams.iter().enumerate() {
        for (j, b2) in beams.iter().enumerate() {
            let Ok(v) = crlb_from(beta, &pair_projections(b1, b2), cfg) else {
                continue;
            };
            if best.is_none_or(|(_, _, bv)| v < bv) {
                best = Some((i, j, v));
            }
        }
    }
    let (i, j, mut value) = best.ok_or(Error::NoFeasibleDesign)?;
    let (mut d1, mut d2) = (grid.point(i), grid.point(j));

    let eval = |d1: T, d2: T| crlb_from(beta, &pair_projections(&table.beam(d1), &table.beam(d2)), cfg).ok();
    let mut step = grid.step();
    for _ in 0..10 {
        step = step / T::lit(2.0);
        let mut moved = (d1, d2, value);
        for di in [-1i8, 0, 1] {
            for dj in [-1i8, 0, 1] {
                if di == 0 && dj == 0 {
                    continue;
                }
                let c1 = d1 + step * T::lit(di as f64);
                let c2 = d2 + step * T::lit(dj as f64);
                if let Some(v) = eval(c1, c2) {
                    if v < moved.2 {
                        moved = (c1, c2, v);
                    }
                }
            }
        }
        (d1, d2, value) = moved;
    }
    Ok(OffsetOptimum {
        delta1: d1,
        delta2: d2,
        crlb: value,
    })
}

/// `1/[I(ψ,W)⁻¹]₃,₃` over the whole offset grid, row-major in `(δ₁, δ₂)`.
/// Degenerate pairs (including the diagonal) report 0.
pub fn inverse_crlb_surface<T: Real>(
    psi: &ChannelState<T>,
    cfg: &ArrayConfig<T>,
    grid: &OffsetSearchGrid<T>,
) -> Vec<(T, T, T)> {
    let table = ResponseTable::new(psi.x, cfg);
    let pts: Vec<T> = grid.points().collect();
    let beams: Vec<SingleBeam<T>> = pts.iter().map(|&d| table.beam(d)).collect();
    let mut out = Vec::with_capacity(pts.len() * pts.len());
    for (i, b1) in beams.iter().enumerate() {
        for (j, b2) in beams.iter().enumerate() {
            let inv = if i == j {
                T::zero()
            } else {
                crlb_from(psi.beta(), &pair_projections(b1, b2), cfg)
                    .map(|v| T::one() / v)
                    .unwrap_or_else(|_| T::zero())
            };
            out.push((pts[i], pts[j], inv));
        }
    }
    out
}

/// The tracker's training pair `(-δ*, +δ*)` centered at `x`.
pub fn optimal_pair<T: Real>(x: T, cfg: &ArrayConfig<T>) -> BeamPair<T> {
    let d = cfg.optimal_offset();
    beam_pair(x, -d, d, cfg)
}

/// Minimum direction CRLB after `n` slots with the fixed `δ*` design.
pub fn min_crlb<T: Real>(psi: &ChannelState<T>, n: usize, cfg: &ArrayConfig<T>) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidParameter("slot count must be at least 1".into()));
    }
    let one = crlb_direction(psi, &optimal_pair(psi.x, cfg), cfg)?;
    Ok(one / T::count(n))
}
