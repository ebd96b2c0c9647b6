//! Beliefs, the posterior-mean map beta, and the optimality ODE.
//!
//! The market maker's zero-profit curve satisfies
//!
//! ```text
//! (beta(p) - p) g'(p) + beta'(p) (g(p) - x0) = 0
//! ```
//!
//! on each side of the operating point p0, which is a fixed point of beta.
//! This module solves that ODE for an arbitrary beta (numeric beliefs or
//! closed forms) and the inverse problem: recovering the beta implied by a
//! given static curve. Both ODEs are singular at p0, so they are integrated
//! in the variable u = ln|p - p0|, which removes the singularity.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::curves::{demand, CurveKind, CurveState};
use crate::error::{domain, validation, Error, Result};
use crate::ode::Dopri5;

/// Relative offset from p0 where ODE integration starts.
pub const START_OFFSET: f64 = 1e-6;
/// Default node count of a grid belief.
pub const DEFAULT_NODES: usize = 1024;
const MIN_NODES: usize = 64;
/// Half-width, in standard deviations, of freshly built grids.
const GRID_HALF_WIDTH: f64 = 10.0;

/// Density of trader noise, evaluated at the offset `p_trad - p`
/// (log offset for lognormal beliefs).
#[derive(Clone)]
pub enum NoiseModel {
    Gaussian { eta: f64 },
    /// Any density; `scale` is used only to size finite-difference steps.
    Custom {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        scale: f64,
    },
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { eta } => write!(f, "Gaussian {{ eta: {eta} }}"),
            NoiseModel::Custom { scale, .. } => write!(f, "Custom {{ scale: {scale} }}"),
        }
    }
}

impl NoiseModel {
    pub fn gaussian(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(validation(format!("noise scale must be > 0, got {eta}")));
        }
        Ok(NoiseModel::Gaussian { eta })
    }

    fn ln_density(&self, d: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { eta } => {
                let z = d / eta;
                -0.5 * z * z - (eta * (2.0 * std::f64::consts::PI).sqrt()).ln()
            }
            NoiseModel::Custom { density, .. } => density(d).ln(),
        }
    }

    pub fn density(&self, d: f64) -> f64 {
        self.ln_density(d).exp()
    }

    fn scale(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { eta } => *eta,
            NoiseModel::Custom { scale, .. } => *scale,
        }
    }
}

/// Probability density over price (or log price) on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief {
    grid: Vec<f64>,
    density: Vec<f64>,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

impl GridBelief {
    /// Build from nodes and (unnormalized) density values.
    pub fn from_parts(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < MIN_NODES {
            return Err(validation(format!("belief grid needs >= {MIN_NODES} nodes")));
        }
        if grid.len() != density.len() {
            return Err(Error::LengthMismatch {
                left: grid.len(),
                right: density.len(),
            });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(validation("belief grid must be strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(validation("belief density must be finite and >= 0"));
        }
        let z = trapezoid(&grid, &density);
        if !(z > 0.0) {
            return Err(validation("belief density has zero mass"));
        }
        let density = density.into_iter().map(|d| d / z).collect();
        Ok(GridBelief { grid, density })
    }

    /// Gaussian N(mean, var) on `nodes` points spanning ±10 standard deviations.
    pub fn gaussian(mean: f64, var: f64, nodes: usize) -> Result<Self> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(validation(format!("belief variance must be > 0, got {var}")));
        }
        let sd = var.sqrt();
        let grid = linspace(mean - GRID_HALF_WIDTH * sd, mean + GRID_HALF_WIDTH * sd, nodes);
        let density = grid
            .iter()
            .map(|p| (-0.5 * (p - mean) * (p - mean) / var).exp())
            .collect();
        Self::from_parts(grid, density)
    }

    /// All mass at `p`: a single-node spike on a fine grid.
    pub fn point_mass(p: f64) -> Result<Self> {
        let h = 1e-6 * p.abs().max(1.0);
        let mid = MIN_NODES / 2;
        let grid = (0..MIN_NODES).map(|i| p + (i as f64 - mid as f64) * h).collect::<Vec<_>>();
        let mut density = vec![0.0; MIN_NODES];
        density[mid] = 1.0;
        let mut b = Self::from_parts(grid, density)?;
        // the trapezoid moments of a hat are exact only around the node itself
        b.grid[mid] = p;
        Ok(b)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn normalization(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn mean(&self) -> f64 {
        let w: Vec<f64> = self.grid.iter().zip(&self.density).map(|(p, d)| p * d).collect();
        trapezoid(&self.grid, &w) / self.normalization()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let w: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(p, d)| (p - m) * (p - m) * d)
            .collect();
        trapezoid(&self.grid, &w) / self.normalization()
    }

    /// Log-likelihood weights ln f_eta(obs - node), shifted so the max is 0,
    /// plus the shift. `transform` maps nodes to the observation space.
    fn log_weights(&self, obs: f64, noise: &NoiseModel) -> (Vec<f64>, f64) {
        let lw: Vec<f64> = self.grid.iter().map(|p| noise.ln_density(obs - p)).collect();
        let shift = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lw.into_iter().map(|l| l - shift).collect(), shift)
    }

    /// Linear interpolation of the density onto `grid`, zero outside.
    fn resample(&self, grid: Vec<f64>) -> Result<Self> {
        let n = self.grid.len();
        let density = grid
            .iter()
            .map(|&p| {
                if p < self.grid[0] || p > self.grid[n - 1] {
                    return 0.0;
                }
                let j = self.grid.partition_point(|&q| q <= p).clamp(1, n - 1);
                let (x0, x1) = (self.grid[j - 1], self.grid[j]);
                let t = (p - x0) / (x1 - x0);
                (1.0 - t) * self.density[j - 1] + t * self.density[j]
            })
            .collect();
        Self::from_parts(grid, density)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Posterior after observing `p_trad`: density ∝ f_eta(p_trad - p) f(p).
///
/// The grid is re-centred (keeping its node count and width) when the
/// posterior mean comes within two standard deviations of either edge.
pub fn bayes_update(belief: &GridBelief, p_trad: f64, noise: &NoiseModel) -> Result<GridBelief> {
    let (lw, shift) = belief.log_weights(p_trad, noise);
    let post: Vec<f64> = lw.iter().zip(&belief.density).map(|(l, d)| l.exp() * d).collect();
    let mass = trapezoid(&belief.grid, &post);
    if !(mass > 0.0) || shift + mass.ln() < -700.0 {
        return Err(Error::OutOfSupport { p_trad });
    }
    let updated = GridBelief::from_parts(belief.grid.clone(), post)?;
    let (m, sd) = (updated.mean(), updated.variance().max(0.0).sqrt());
    let (lo, hi) = (updated.grid[0], *updated.grid.last().unwrap());
    if m - 2.0 * sd <= lo || m + 2.0 * sd >= hi {
        let half = 0.5 * (hi - lo);
        return updated.resample(linspace(m - half, m + half, updated.grid.len()));
    }
    Ok(updated)
}

/// Where a beta function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    NumericFromBelief,
    ClosedFormGaussian,
    ClosedFormLognormal,
    ImpliedFromCurve,
    Constant,
}

#[derive(Debug, Clone)]
enum BetaRepr {
    Affine { mu: f64, gain: f64 },
    LogPower { p0: f64, gain: f64 },
    Belief { belief: GridBelief, noise: NoiseModel },
    LogBelief { belief: GridBelief, noise: NoiseModel },
    Sampled { p: Vec<f64>, beta: Vec<f64>, slope: Vec<f64> },
    Constant { p0: f64 },
}

/// The map from trader price to posterior-mean price.
#[derive(Debug, Clone)]
pub struct BetaFunction {
    repr: BetaRepr,
    pub provenance: Provenance,
}

impl BetaFunction {
    /// beta(p) = (1 - K) mu + K p: Gaussian prior with mean mu and gain K.
    pub fn gaussian(mu: f64, gain: f64) -> Self {
        BetaFunction {
            repr: BetaRepr::Affine { mu, gain },
            provenance: Provenance::ClosedFormGaussian,
        }
    }

    /// Gaussian closed form from prior variance and noise scale.
    pub fn gaussian_from_prior(mu: f64, prior_var: f64, eta: f64) -> Self {
        Self::gaussian(mu, prior_var / (prior_var + eta * eta))
    }

    /// beta(p) = p^K p0^(1-K): lognormal prior whose operating point is p0.
    pub fn lognormal(p0: f64, gain: f64) -> Self {
        BetaFunction {
            repr: BetaRepr::LogPower { p0, gain },
            provenance: Provenance::ClosedFormLognormal,
        }
    }

    pub fn constant(p0: f64) -> Self {
        BetaFunction {
            repr: BetaRepr::Constant { p0 },
            provenance: Provenance::Constant,
        }
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        match &self.repr {
            BetaRepr::Affine { mu, gain } => Ok((1.0 - gain) * mu + gain * p),
            BetaRepr::LogPower { p0, gain } => Ok(p.powf(*gain) * p0.powf(1.0 - gain)),
            BetaRepr::Belief { belief, noise } => posterior_ratio(belief, noise, p, |x| x),
            BetaRepr::LogBelief { belief, noise } => {
                if p <= 0.0 {
                    return Err(domain("lognormal beta needs p > 0"));
                }
                posterior_ratio(belief, noise, p.ln(), f64::exp)
            }
            BetaRepr::Sampled { p: ps, beta, slope } => Ok(hermite(ps, beta, slope, p).0),
            BetaRepr::Constant { p0 } => Ok(*p0),
        }
    }

    pub fn derivative(&self, p: f64) -> Result<f64> {
        match &self.repr {
            BetaRepr::Affine { gain, .. } => Ok(*gain),
            BetaRepr::LogPower { p0, gain } => Ok(gain * p.powf(gain - 1.0) * p0.powf(1.0 - gain)),
            BetaRepr::Belief { belief, noise } => match noise {
                // d/dp E[x | p] = Var[x | p] / eta^2 for Gaussian noise
                NoiseModel::Gaussian { eta } => {
                    let m = posterior_ratio(belief, noise, p, |x| x)?;
                    let v = posterior_ratio(belief, noise, p, |x| (x - m) * (x - m))?;
                    Ok(v / (eta * eta))
                }
                NoiseModel::Custom { .. } => self.central_difference(p, noise.scale()),
            },
            BetaRepr::LogBelief { noise, .. } => self.central_difference(p, noise.scale() * p),
            BetaRepr::Sampled { p: ps, beta, slope } => Ok(hermite(ps, beta, slope, p).1),
            BetaRepr::Constant { .. } => Ok(0.0),
        }
    }

    fn central_difference(&self, p: f64, scale: f64) -> Result<f64> {
        let h = 1e-5 * scale.max(1e-12);
        Ok((self.eval(p + h)? - self.eval(p - h)?) / (2.0 * h))
    }

    /// True for the identity map beta(p) = p (every price is a fixed point).
    fn is_identity(&self) -> bool {
        matches!(self.repr, BetaRepr::Affine { gain, .. } if gain == 1.0)
            || matches!(self.repr, BetaRepr::LogPower { gain, .. } if gain == 1.0)
    }
}

/// ∫ h(x) f_eta(obs - x) f(x) dx / ∫ f_eta(obs - x) f(x) dx on the grid.
fn posterior_ratio(belief: &GridBelief, noise: &NoiseModel, obs: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
    let (lw, shift) = belief.log_weights(obs, noise);
    let w: Vec<f64> = lw.iter().zip(&belief.density).map(|(l, d)| l.exp() * d).collect();
    let den = trapezoid(&belief.grid, &w);
    // the unshifted denominator is den * e^shift; guard it below 1e-300
    if !(den > 0.0) || shift + den.ln() < (1e-300f64).ln() {
        return Err(Error::OutOfSupport { p_trad: obs });
    }
    let hw: Vec<f64> = belief.grid.iter().zip(&w).map(|(x, wi)| h(*x) * wi).collect();
    Ok(trapezoid(&belief.grid, &hw) / den)
}

/// Cubic Hermite interpolation (value, derivative); linear extension outside.
fn hermite(ps: &[f64], ys: &[f64], ds: &[f64], p: f64) -> (f64, f64) {
    let n = ps.len();
    if n == 1 {
        return (ys[0], ds[0]);
    }
    if p <= ps[0] {
        return (ys[0] + ds[0] * (p - ps[0]), ds[0]);
    }
    if p >= ps[n - 1] {
        return (ys[n - 1] + ds[n - 1] * (p - ps[n - 1]), ds[n - 1]);
    }
    let j = ps.partition_point(|&q| q <= p).clamp(1, n - 1);
    let (x0, x1) = (ps[j - 1], ps[j]);
    let h = x1 - x0;
    let t = (p - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * ys[j - 1]
        + (t3 - 2.0 * t2 + t) * h * ds[j - 1]
        + (-2.0 * t3 + 3.0 * t2) * ys[j]
        + (t3 - t2) * h * ds[j];
    let dv = ((6.0 * t2 - 6.0 * t) * ys[j - 1]
        + (3.0 * t2 - 4.0 * t + 1.0) * h * ds[j - 1]
        + (-6.0 * t2 + 6.0 * t) * ys[j]
        + (3.0 * t2 - 2.0 * t) * h * ds[j])
        / h;
    (v, dv)
}

/// Numeric beta from a price-space belief.
pub fn beta_from_belief(belief: &GridBelief, noise: &NoiseModel) -> BetaFunction {
    BetaFunction {
        repr: BetaRepr::Belief {
            belief: belief.clone(),
            noise: noise.clone(),
        },
        provenance: Provenance::NumericFromBelief,
    }
}

/// Numeric beta from a belief over log price with noise in log space;
/// the returned function maps prices to posterior-mean prices.
pub fn beta_from_log_belief(belief: &GridBelief, noise: &NoiseModel) -> BetaFunction {
    BetaFunction {
        repr: BetaRepr::LogBelief {
            belief: belief.clone(),
            noise: noise.clone(),
        },
        provenance: Provenance::NumericFromBelief,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub p: f64,
    /// beta is the identity: every point is fixed and `p` is the bracket midpoint.
    pub degenerate: bool,
}

/// Solve p = beta(p) on [lo, hi].
pub fn solve_fixed_point(beta: &BetaFunction, lo: f64, hi: f64) -> Result<FixedPoint> {
    if !(lo < hi) {
        return Err(validation(format!("bracket must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    if beta.is_identity() {
        return Ok(FixedPoint {
            p: 0.5 * (lo + hi),
            degenerate: true,
        });
    }
    match beta.repr {
        BetaRepr::Affine { mu, .. } => return Ok(FixedPoint { p: mu, degenerate: false }),
        BetaRepr::LogPower { p0, .. } | BetaRepr::Constant { p0 } => {
            return Ok(FixedPoint { p: p0, degenerate: false })
        }
        _ => {}
    }
    let r = |p: f64| beta.eval(p).map(|b| b - p);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (r(a)?, r(b)?);
    let tol = |p: f64| 1e-10 * p.abs().max(1.0);
    if fa.abs() < tol(a) {
        return Ok(FixedPoint { p: a, degenerate: false });
    }
    if fb.abs() < tol(b) {
        return Ok(FixedPoint { p: b, degenerate: false });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoFixedPoint { lo, hi });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = r(m)?;
        if fm.abs() < tol(m) || (b - a) < 1e-15 * m.abs().max(1.0) {
            return Ok(FixedPoint { p: m, degenerate: false });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(FixedPoint {
        p: 0.5 * (a + b),
        degenerate: false,
    })
}

/// Operating point of the lognormal family: exp(mu + P_post / (2(1 - K))).
pub fn lognormal_operating_point(mu_log: f64, p_post: f64, gain: f64) -> f64 {
    (mu_log + p_post / (2.0 * (1.0 - gain))).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// Demand curve sampled at increasing prices.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub p: Vec<f64>,
    pub g: Vec<f64>,
}

/// Integrate the optimality ODE from p0 (1 ± 1e-6) out to `p_end`.
///
/// The ODE is linear in the gap h = |g - x0|, so it is solved for ln h; this
/// keeps full relative precision when the curve hugs x0 near p0. `gap_start`
/// is h at the starting offset and is genuinely free, because a
/// discontinuity at p0 is allowed. The curve is reported at `samples` points
/// spaced evenly in ln|p - p0|, in increasing price order.
pub fn integrate_optimal_curve(
    beta: &BetaFunction,
    state: &CurveState,
    side: Side,
    p_end: f64,
    gap_start: f64,
    samples: usize,
) -> Result<SampledCurve> {
    let p0 = state.p0;
    let x0 = state.x0;
    let s = match side {
        Side::Above => 1.0,
        Side::Below => -1.0,
    };
    let u_start = (START_OFFSET * p0).ln();
    if !((p_end - p0) * s > START_OFFSET * p0) {
        return Err(validation(format!("p_end={p_end} is not on the requested side of p0={p0}")));
    }
    if !(gap_start > 0.0 && gap_start.is_finite()) {
        return Err(validation(format!("starting gap must be > 0, got {gap_start}")));
    }
    let u_end = ((p_end - p0) * s).ln();
    let rhs = |u: f64, _: f64| -> Result<f64> {
        let dp = s * u.exp();
        let p = p0 + dp;
        let b = beta.eval(p)?;
        let gap = b - p;
        if gap.abs() <= 1e-14 * p.abs().max(1.0) {
            return Err(Error::Singular { p });
        }
        Ok(-dp * beta.derivative(p)? / gap)
    };
    let us = linspace(u_start, u_end, samples.max(2));
    let ws = Dopri5::default().solve(rhs, u_start, gap_start.ln(), &us)?;
    let mut p: Vec<f64> = us.iter().map(|u| p0 + s * u.exp()).collect();
    let mut g: Vec<f64> = ws.iter().map(|w| x0 - s * w.exp()).collect();
    if side == Side::Below {
        p.reverse();
        g.reverse();
    }
    for i in 1..g.len() {
        if g[i] > g[i - 1] + 1e-12 * g[i - 1].abs().max(1.0) {
            return Err(Error::NotMonotone { p: p[i] });
        }
    }
    Ok(SampledCurve { p, g })
}

/// Implied beta of a static curve, with a flag for the degenerate case.
#[derive(Debug, Clone)]
pub struct ImpliedBeta {
    pub beta: BetaFunction,
    /// Values on the requested grid, in the caller's order.
    pub values: Vec<f64>,
    /// The curve is flat away from p0 (CSMM), so beta is the constant p0.
    pub degenerate: bool,
}

fn demand_slope(kind: &CurveKind, state: &CurveState, p: f64) -> Result<f64> {
    match kind {
        CurveKind::Cpmm { k } => Ok(-0.5 * k.sqrt() * p.powf(-1.5)),
        CurveKind::Cmmm { theta } => Ok((theta - 1.0) * demand(kind, state, p)? / p),
        _ => {
            let h = 1e-6 * p;
            Ok((demand(kind, state, p + h)? - demand(kind, state, p - h)?) / (2.0 * h))
        }
    }
}

/// Solve beta'(p) (g(p) - x0) + beta(p) g'(p) - p g'(p) = 0 with beta(p0) = p0,
/// outward from p0 on both sides, and report beta on `p_grid`.
pub fn implied_beta(kind: &CurveKind, state: &CurveState, p_grid: &[f64]) -> Result<ImpliedBeta> {
    let p0 = state.p0;
    let x0 = state.x0;
    if p_grid.iter().any(|p| !(*p > 0.0)) {
        return Err(domain("implied beta grid must be positive"));
    }
    if matches!(kind, CurveKind::Csmm) {
        return Ok(ImpliedBeta {
            beta: BetaFunction::constant(p0),
            values: vec![p0; p_grid.len()],
            degenerate: true,
        });
    }
    // Near p0, g - x0 ~ c (p - p0)^a, which forces beta - p0 ~ a/(1+a) (p - p0).
    let d = START_OFFSET * p0;
    let start_slope = |s: f64| -> Result<f64> {
        let g1 = demand(kind, state, p0 + s * d)? - x0;
        let g2 = demand(kind, state, p0 + 2.0 * s * d)? - x0;
        if g1 == 0.0 || g2 == 0.0 {
            return Err(Error::Singular { p: p0 + s * d });
        }
        let a = (g2 / g1).ln() / 2f64.ln();
        Ok(a / (1.0 + a))
    };

    let mut nodes: Vec<(f64, f64, f64)> = vec![];
    for s in [1.0, -1.0] {
        let mut side: Vec<f64> = p_grid.iter().cloned().filter(|p| (p - p0) * s > d).collect();
        if side.is_empty() {
            continue;
        }
        side.sort_by(|a, b| ((a - p0) * s).partial_cmp(&((b - p0) * s)).unwrap());
        side.dedup();
        let c = start_slope(s)?;
        let rhs = |u: f64, b: f64| -> Result<f64> {
            let dp = s * u.exp();
            let p = p0 + dp;
            let gap = demand(kind, state, p)? - x0;
            if gap == 0.0 {
                return Err(Error::Singular { p });
            }
            Ok(dp * (p - b) * demand_slope(kind, state, p)? / gap)
        };
        let u0 = d.ln();
        let us: Vec<f64> = side.iter().map(|p| ((p - p0) * s).ln()).collect();
        let bs = Dopri5::default().solve(rhs, u0, p0 + c * s * d, &us)?;
        nodes.push((p0 + s * d, p0 + c * s * d, c));
        for (p, b) in side.iter().zip(bs) {
            let gap = demand(kind, state, *p)? - x0;
            let slope = (p - b) * demand_slope(kind, state, *p)? / gap;
            nodes.push((*p, b, slope));
        }
    }
    let c_mid = start_slope(1.0).unwrap_or(0.5);
    nodes.push((p0, p0, c_mid));
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    nodes.dedup_by(|a, b| a.0 == b.0);
    let (ps, rest): (Vec<f64>, Vec<(f64, f64)>) = nodes.into_iter().map(|(p, b, s)| (p, (b, s))).unzip();
    let (bs, ss): (Vec<f64>, Vec<f64>) = rest.into_iter().unzip();
    let beta = BetaFunction {
        repr: BetaRepr::Sampled { p: ps, beta: bs, slope: ss },
        provenance: Provenance::ImpliedFromCurve,
    };
    let values = p_grid.iter().map(|p| beta.eval(*p)).collect::<Result<Vec<_>>>()?;
    Ok(ImpliedBeta {
        beta,
        values,
        degenerate: false,
    })
}

/// Closed-form beta implied by a constant-mean curve with weight theta:
/// ((1-theta)/theta) (p^theta - p0^theta) / (p0^(theta-1) - p^(theta-1)).
pub fn cmmm_implied_beta(p: f64, p0: f64, theta: f64) -> f64 {
    let r = (p / p0).ln();
    if r == 0.0 {
        return p0;
    }
    // both differences vanish at p0; expm1 keeps their ratio exact nearby
    p0 * (1.0 - theta) / theta * (theta * r).exp_m1() / -((theta - 1.0) * r).exp_m1()
}

/// beta(p) = p^theta p0^(1-theta) exp(sigma^2 / (2(1-theta))): the beta of the
/// model under which a static constant-mean curve is optimal.
pub fn cmmm_model_beta(p: f64, p0: f64, theta: f64, sigma: f64) -> f64 {
    p.powf(theta) * p0.powf(1.0 - theta) * (sigma * sigma / (2.0 * (1.0 - theta))).exp()
}

/// Write `(x, y)` samples as a two-column CSV with the given header names.
pub fn write_samples_csv<W: Write>(w: W, header: (&str, &str), xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record([header.0, header.1])?;
    for (x, y) in xs.iter().zip(ys) {
        wtr.write_record([x.to_string(), y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_beta_is_constant() {
        let b = GridBelief::point_mass(5.0).unwrap();
        let beta = beta_from_belief(&b, &NoiseModel::gaussian(1.0).unwrap());
        for pt in [3.0, 5.0, 8.0] {
            assert!((beta.eval(pt).unwrap() - 5.0).abs() < 1e-12);
        }
        let post = bayes_update(&b, 7.0, &NoiseModel::gaussian(1.0).unwrap()).unwrap();
        assert!((post.mean() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_beta_is_average_for_equal_variances() {
        let b = GridBelief::gaussian(10.0, 1.0, DEFAULT_NODES).unwrap();
        let beta = beta_from_belief(&b, &NoiseModel::gaussian(1.0).unwrap());
        for pt in [8.0, 10.0, 12.0] {
            assert!((beta.eval(pt).unwrap() - (10.0 + pt) / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fixed_point_cases() {
        let fp = solve_fixed_point(&BetaFunction::gaussian(10.0, 0.3), 0.0, 20.0).unwrap();
        assert_eq!(fp.p, 10.0);
        let fp = solve_fixed_point(&BetaFunction::gaussian(0.0, 1.0), 2.0, 4.0).unwrap();
        assert!(fp.degenerate);
        assert_eq!(fp.p, 3.0);
        let p = lognormal_operating_point(0.0, 0.02, 0.5);
        assert_eq!(p, 0.02f64.exp());
    }

    #[test]
    fn fixed_point_of_numeric_beta() {
        let b = GridBelief::gaussian(3.0, 0.5, DEFAULT_NODES).unwrap();
        let beta = beta_from_belief(&b, &NoiseModel::gaussian(0.7).unwrap());
        let fp = solve_fixed_point(&beta, 1.0, 6.0).unwrap();
        assert!((fp.p - 3.0).abs() < 1e-8);
        assert!(matches!(
            solve_fixed_point(&beta, 4.0, 6.0),
            Err(Error::NoFixedPoint { .. })
        ));
    }

    #[test]
    fn constant_beta_gives_flat_curve() {
        let s = CurveState::new(2.0, 5.0, 10.0).unwrap();
        let c = integrate_optimal_curve(&BetaFunction::constant(2.0), &s, Side::Above, 3.0, 1.0, 20).unwrap();
        assert!(c.g.iter().all(|g| (g - 4.0).abs() < 1e-14));
    }

    #[test]
    fn model_beta_examples() {
        assert_eq!(cmmm_model_beta(4.0, 1.0, 0.5, 0.0), 2.0);
        assert!((cmmm_model_beta(1.0, 1.0, 0.5, 0.1) - 0.01f64.exp()).abs() < 1e-15);
        assert_eq!(cmmm_implied_beta(3.0, 3.0, 0.4), 3.0);
    }

    #[test]
    fn hermite_is_exact_on_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let ps = vec![0.0, 1.0, 2.5];
        let ys: Vec<f64> = ps.iter().map(|&x| f(x)).collect();
        let ds: Vec<f64> = ps.iter().map(|&x| df(x)).collect();
        for x in [0.3, 1.7, 2.2] {
            let (v, d) = hermite(&ps, &ys, &ds, x);
            assert!((v - f(x)).abs() < 1e-12 && (d - df(x)).abs() < 1e-12);
        }
    }
}
