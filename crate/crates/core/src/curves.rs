//! Demand curves g(p), reserve accounting and trade execution.
//!
//! A curve is described by a [`CurveKind`] together with a [`CurveState`]
//! (operating point and reserves). Every trade moves the operating point from
//! `p0` to the trader's price, so the AMM gives up `dx = g(p0) - g(p_trad)`
//! units of asset and receives `dy = -∫ p dg` of numeraire. Integrating by
//! parts gives the form used for all kinds:
//!
//! ```text
//! dy = p0 * x0 - p_trad * g(p_trad) + ∫_{p0}^{p_trad} g(p) dp
//! ```
//!
//! which also accounts for a point mass of asset sitting exactly at `p0`.

use crate::error::{domain, validation, Error, Result};
use crate::quad;

/// Gains above this are treated as the step curve (the exponent K/(1-K) blows up).
const STEP_GAIN: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveState {
    /// Operating point (marginal price).
    pub p0: f64,
    /// Asset reserves.
    pub x0: f64,
    /// Numeraire reserves.
    pub y0: f64,
}

impl CurveState {
    pub fn new(p0: f64, x0: f64, y0: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(domain(format!("operating point must be > 0, got {p0}")));
        }
        if !(x0 >= 0.0 && y0 >= 0.0) {
            return Err(domain(format!("reserves must be >= 0, got x0={x0}, y0={y0}")));
        }
        Ok(CurveState { p0, x0, y0 })
    }

    /// Balanced constant-product pool holding `x0` asset at price `p0`.
    pub fn cpmm(p0: f64, x0: f64) -> Result<Self> {
        Self::new(p0, x0, p0 * x0)
    }

    /// Constant-mean pool with weight `theta` whose marginal price is `p0`.
    pub fn cmmm(theta: f64, p0: f64, x0: f64) -> Result<Self> {
        check_theta(theta)?;
        Self::new(p0, x0, p0 * x0 * (1.0 - theta) / theta)
    }
}

/// Parameters of the optimal curve family for one side of `p0`.
///
/// `gain` is the Kalman gain K; the curve exponent is K/(1-K). `c` shapes the
/// buy side (p > p0), `c_sell` the sell side (p < p0). A zero constant gives
/// the step curve on that side: all of the side's budget sits at `p0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalParams {
    pub gain: f64,
    pub c: f64,
    pub c_sell: f64,
    /// Asset left on the continuous buy branch; `x0 - x_tilde` is a point mass at p0.
    pub x_tilde: f64,
}

impl OptimalParams {
    fn exponent(&self) -> f64 {
        self.gain / (1.0 - self.gain)
    }

    fn is_step(&self) -> bool {
        self.gain > STEP_GAIN
    }

    fn validate(&self, state: &CurveState) -> Result<()> {
        if !(self.gain > 0.0 && self.gain < 1.0) {
            return Err(validation(format!("gain K must be in (0,1), got {}", self.gain)));
        }
        if !(self.c >= 0.0 && self.c_sell >= 0.0) {
            return Err(validation("curve constants must be >= 0"));
        }
        if !(self.x_tilde >= 0.0 && self.x_tilde <= state.x0 * (1.0 + 1e-12)) {
            return Err(validation(format!(
                "x_tilde must lie in [0, x0={}], got {}",
                state.x0, self.x_tilde
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// Constant sum: every unit trades at p0.
    Csmm,
    /// Constant product x*y = k.
    Cpmm { k: f64 },
    /// Constant mean x^theta * y^(1-theta) = const.
    Cmmm { theta: f64 },
    /// Optimal curve for Gaussian beliefs: g = x~ - C (p - p0)^(K/(1-K)) above p0.
    OptimalGaussian(OptimalParams),
    /// Optimal curve for lognormal beliefs:
    /// g = x~ - C (p^(1-K) - kappa)^(K/(1-K)) p^(-K) above p0, kappa = p0^(1-K).
    OptimalLognormal { params: OptimalParams, kappa: f64 },
    /// (1 - eps) * g_opt + eps * g_exp.
    Mixed {
        opt: Box<CurveKind>,
        exp: Box<CurveKind>,
        epsilon: f64,
    },
}

impl CurveKind {
    /// Constant-product curve through the state's reserves.
    pub fn cpmm_through(state: &CurveState) -> Self {
        CurveKind::Cpmm {
            k: state.x0 * state.y0,
        }
    }

    pub fn optimal_lognormal(p0: f64, params: OptimalParams) -> Self {
        CurveKind::OptimalLognormal {
            params,
            kappa: p0.powf(1.0 - params.gain),
        }
    }

    pub fn validate(&self, state: &CurveState) -> Result<()> {
        match self {
            CurveKind::Csmm => Ok(()),
            CurveKind::Cpmm { k } => {
                if !(*k > 0.0) {
                    return Err(validation(format!("CPMM k must be > 0, got {k}")));
                }
                Ok(())
            }
            CurveKind::Cmmm { theta } => check_theta(*theta),
            CurveKind::OptimalGaussian(o) => o.validate(state),
            CurveKind::OptimalLognormal { params, kappa } => {
                params.validate(state)?;
                let expect = state.p0.powf(1.0 - params.gain);
                if (kappa - expect).abs() > 1e-9 * expect {
                    return Err(validation(format!(
                        "kappa must equal p0^(1-K) = {expect}, got {kappa}"
                    )));
                }
                Ok(())
            }
            CurveKind::Mixed { opt, exp, epsilon } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(validation(format!("epsilon must be in [0,1], got {epsilon}")));
                }
                opt.validate(state)?;
                exp.validate(state)
            }
        }
    }

    /// True when the demand is continuous and strictly decreasing around
    /// `p`, so a trade ending there leaves the marginal price at `p`.
    fn continuous_at(&self, state: &CurveState, p: f64) -> bool {
        match self {
            CurveKind::Csmm => false,
            CurveKind::Cpmm { .. } | CurveKind::Cmmm { .. } => true,
            CurveKind::OptimalGaussian(o) | CurveKind::OptimalLognormal { params: o, .. } => {
                if o.is_step() {
                    return false;
                }
                let (c, within) = if p > state.p0 {
                    (o.c, self.buy_cap(state).is_none_or(|cap| p < cap))
                } else {
                    (o.c_sell, self.sell_cap(state).is_none_or(|cap| p > cap))
                };
                c > 0.0 && within
            }
            CurveKind::Mixed { opt, exp, epsilon } => {
                (*epsilon > 0.0 && exp.continuous_at(state, p))
                    || (*epsilon < 1.0 && opt.continuous_at(state, p))
            }
        }
    }

    /// Price above p0 where the optimal buy branch runs out of asset.
    fn buy_cap(&self, state: &CurveState) -> Option<f64> {
        match self {
            CurveKind::OptimalGaussian(o) if o.c > 0.0 && !o.is_step() => {
                Some(state.p0 + (o.x_tilde / o.c).powf(1.0 / o.exponent()))
            }
            CurveKind::OptimalLognormal { params: o, .. } if o.c > 0.0 && !o.is_step() => {
                // c * (1 - (p0/p)^(1-K))^a = x~
                let r = (o.x_tilde / o.c).powf(1.0 / o.exponent());
                if r >= 1.0 {
                    None
                } else {
                    Some(state.p0 * (1.0 - r).powf(-1.0 / (1.0 - o.gain)))
                }
            }
            _ => None,
        }
    }

    /// Price below p0 where the optimal sell branch spends its numeraire budget.
    fn sell_cap(&self, state: &CurveState) -> Option<f64> {
        let budget = state.y0 / state.p0;
        match self {
            CurveKind::OptimalGaussian(o) if o.c_sell > 0.0 && !o.is_step() => {
                Some(state.p0 - (budget / o.c_sell).powf(1.0 / o.exponent()))
            }
            CurveKind::OptimalLognormal { params: o, .. } if o.c_sell > 0.0 && !o.is_step() => {
                // c_sell * ((p0/p)^(1-K) - 1)^a = budget
                let r = (budget / o.c_sell).powf(1.0 / o.exponent());
                Some(state.p0 * (1.0 + r).powf(-1.0 / (1.0 - o.gain)))
            }
            _ => None,
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(validation(format!("theta must be in (0,1), got {theta}")));
    }
    Ok(())
}

fn check_price(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("price must be > 0, got {p}")));
    }
    Ok(())
}

/// Demand g(p): asset the AMM holds when its operating point is at `p`.
///
/// At exactly `p = p0` every kind returns the current reserves `x0`. Step
/// curves hold their whole budget at p0: below it they hold `x0 + y0/p0`
/// (all numeraire converted), above it nothing.
pub fn demand(kind: &CurveKind, state: &CurveState, p: f64) -> Result<f64> {
    check_price(p)?;
    Ok(demand_unchecked(kind, state, p))
}

fn demand_unchecked(kind: &CurveKind, state: &CurveState, p: f64) -> f64 {
    let CurveState { p0, x0, y0 } = *state;
    if p == p0 {
        return x0;
    }
    let full = x0 + y0 / p0;
    match kind {
        CurveKind::Csmm => {
            if p < p0 {
                full
            } else {
                0.0
            }
        }
        CurveKind::Cpmm { k } => (k / p).sqrt(),
        CurveKind::Cmmm { theta } => cmmm_scale(*theta, state) * p.powf(theta - 1.0),
        CurveKind::OptimalGaussian(o) => {
            let a = o.exponent();
            if p > p0 {
                if o.c == 0.0 || o.is_step() {
                    0.0
                } else {
                    (o.x_tilde - o.c * (p - p0).powf(a)).max(0.0)
                }
            } else if o.c_sell == 0.0 || o.is_step() {
                full
            } else {
                (x0 + o.c_sell * (p0 - p).powf(a)).min(full)
            }
        }
        CurveKind::OptimalLognormal { params: o, kappa } => {
            let a = o.exponent();
            let k = o.gain;
            if p > p0 {
                if o.c == 0.0 || o.is_step() {
                    0.0
                } else {
                    let h = (1.0 - kappa * p.powf(k - 1.0)).max(0.0).powf(a);
                    (o.x_tilde - o.c * h).max(0.0)
                }
            } else if o.c_sell == 0.0 || o.is_step() {
                full
            } else {
                let h = (kappa * p.powf(k - 1.0) - 1.0).max(0.0).powf(a);
                (x0 + o.c_sell * h).min(full)
            }
        }
        CurveKind::Mixed { opt, exp, epsilon } => {
            (1.0 - epsilon) * demand_unchecked(opt, state, p) + epsilon * demand_unchecked(exp, state, p)
        }
    }
}

/// Multiplier m with g(p) = m * p^(theta-1) for the constant-mean curve.
fn cmmm_scale(theta: f64, state: &CurveState) -> f64 {
    let ln_c = theta * state.x0.ln() + (1.0 - theta) * state.y0.ln();
    (ln_c + (1.0 - theta) * (theta / (1.0 - theta)).ln()).exp()
}

/// Oriented integral ∫_{p0}^{p} g(q) dq.
pub fn demand_integral(kind: &CurveKind, state: &CurveState, p: f64) -> Result<f64> {
    check_price(p)?;
    let CurveState { p0, x0, y0 } = *state;
    if p == p0 {
        return Ok(0.0);
    }
    let full = x0 + y0 / p0;
    Ok(match kind {
        CurveKind::Csmm => {
            if p > p0 {
                0.0
            } else {
                -(p0 - p) * full
            }
        }
        CurveKind::Cpmm { k } => 2.0 * k.sqrt() * (p.sqrt() - p0.sqrt()),
        CurveKind::Cmmm { theta } => {
            cmmm_scale(*theta, state) * (p.powf(*theta) - p0.powf(*theta)) / theta
        }
        CurveKind::OptimalGaussian(o) => {
            let a = o.exponent();
            if p > p0 {
                if o.c == 0.0 || o.is_step() {
                    return Ok(0.0);
                }
                let u_cap = (o.x_tilde / o.c).powf(1.0 / a);
                let u = (p - p0).min(u_cap);
                o.x_tilde * u - o.c * u.powf(a + 1.0) / (a + 1.0)
            } else {
                let len = p0 - p;
                if o.c_sell == 0.0 || o.is_step() {
                    return Ok(-len * full);
                }
                let u_cap = ((y0 / p0) / o.c_sell).powf(1.0 / a);
                let u = len.min(u_cap);
                -(x0 * u + o.c_sell * u.powf(a + 1.0) / (a + 1.0) + (len - u) * full)
            }
        }
        CurveKind::OptimalLognormal { params: o, .. } => {
            if o.is_step() || (p > p0 && o.c == 0.0) || (p < p0 && o.c_sell == 0.0) {
                return Ok(if p > p0 { 0.0 } else { -(p0 - p) * full });
            }
            // split at the cap so the integrand is smooth on each piece
            let (end, tail) = if p > p0 {
                match kind.buy_cap(state) {
                    Some(cap) if cap < p => (cap, 0.0),
                    _ => (p, 0.0),
                }
            } else {
                match kind.sell_cap(state) {
                    Some(cap) if cap > p => (cap, -(cap - p) * full),
                    _ => (p, 0.0),
                }
            };
            let f = |q: f64| demand_unchecked(kind, state, q);
            let scale = full.max(1e-300) * (end - p0).abs();
            quad::integrate(f, p0, end, 1e-10_f64.min(1e-12 * scale).max(1e-300), 1e-12)? + tail
        }
        CurveKind::Mixed { opt, exp, epsilon } => {
            (1.0 - epsilon) * demand_integral(opt, state, p)? + epsilon * demand_integral(exp, state, p)?
        }
    })
}

/// x0 - g(p), written so that nothing close to x0 is subtracted from x0.
fn shortfall(kind: &CurveKind, state: &CurveState, p: f64) -> f64 {
    let CurveState { p0, x0, y0 } = *state;
    if p == p0 {
        return 0.0;
    }
    let budget = y0 / p0;
    match kind {
        CurveKind::OptimalGaussian(o) | CurveKind::OptimalLognormal { params: o, .. } => {
            let a = o.exponent();
            let step = o.is_step();
            if p > p0 {
                if o.c == 0.0 || step {
                    return x0;
                }
                let h = match kind {
                    CurveKind::OptimalGaussian(_) => (p - p0).powf(a),
                    _ => (-((o.gain - 1.0) * ((p - p0) / p0).ln_1p()).exp_m1()).max(0.0).powf(a),
                };
                (x0 - o.x_tilde) + (o.c * h).min(o.x_tilde)
            } else {
                if o.c_sell == 0.0 || step {
                    return -budget;
                }
                let h = match kind {
                    CurveKind::OptimalGaussian(_) => (p0 - p).powf(a),
                    _ => ((o.gain - 1.0) * ((p - p0) / p0).ln_1p()).exp_m1().max(0.0).powf(a),
                };
                -(o.c_sell * h).min(budget)
            }
        }
        CurveKind::Mixed { opt, exp, epsilon } => {
            (1.0 - epsilon) * shortfall(opt, state, p) + epsilon * shortfall(exp, state, p)
        }
        _ => x0 - demand_unchecked(kind, state, p),
    }
}

/// Oriented ∫_{p0}^{p} (x0 - g(q)) dq for the piecewise curves.
fn shortfall_integral(kind: &CurveKind, state: &CurveState, p: f64) -> Result<f64> {
    let CurveState { p0, x0, y0 } = *state;
    let budget = y0 / p0;
    Ok(match kind {
        CurveKind::Csmm => {
            if p > p0 {
                x0 * (p - p0)
            } else {
                budget * (p0 - p)
            }
        }
        CurveKind::OptimalGaussian(o) => {
            let a = o.exponent();
            if p > p0 {
                let u = p - p0;
                if o.c == 0.0 || o.is_step() {
                    return Ok(x0 * u);
                }
                let uc = u.min((o.x_tilde / o.c).powf(1.0 / a));
                (x0 - o.x_tilde) * u + o.c * uc.powf(a + 1.0) / (a + 1.0) + o.x_tilde * (u - uc)
            } else {
                let len = p0 - p;
                if o.c_sell == 0.0 || o.is_step() {
                    return Ok(budget * len);
                }
                let vc = len.min((budget / o.c_sell).powf(1.0 / a));
                o.c_sell * vc.powf(a + 1.0) / (a + 1.0) + budget * (len - vc)
            }
        }
        CurveKind::OptimalLognormal { params: o, .. } => {
            if o.is_step() || (p > p0 && o.c == 0.0) || (p < p0 && o.c_sell == 0.0) {
                return Ok(if p > p0 { x0 * (p - p0) } else { budget * (p0 - p) });
            }
            // split at the cap so the integrand is smooth on each piece
            let (end, tail) = if p > p0 {
                match kind.buy_cap(state) {
                    Some(cap) if cap < p => (cap, x0 * (p - cap)),
                    _ => (p, 0.0),
                }
            } else {
                match kind.sell_cap(state) {
                    Some(cap) if cap > p => (cap, budget * (cap - p)),
                    _ => (p, 0.0),
                }
            };
            let f = |q: f64| shortfall(kind, state, q);
            let scale = (x0 + budget).max(1e-300) * (end - p0).abs();
            quad::integrate(f, p0, end, 1e-13 * scale, 1e-12)? + tail
        }
        _ => unreachable!("continuous invariant curves use closed-form deltas"),
    })
}

/// (dx, dy) of a trade moving the operating point to `p`, free of the
/// cancellation the textbook form suffers when `p` is very close to p0.
///
/// Invariant curves use dy = ∫ q (-g'(q)) dq in closed form, plus the
/// offset p0 (x0 - g(p0)) for states that sit off the curve. Piecewise
/// curves use dy = p dx - ∫_{p0}^{p} (x0 - g).
fn trade_deltas(kind: &CurveKind, state: &CurveState, p: f64) -> Result<(f64, f64)> {
    let CurveState { p0, x0, .. } = *state;
    let r = ((p - p0) / p0).ln_1p();
    Ok(match kind {
        CurveKind::Cpmm { k } => {
            let sk = k.sqrt();
            let (sp, sp0) = (p.sqrt(), p0.sqrt());
            let off = x0 - sk / sp0;
            let dx = off + sk * (p - p0) / (sp * sp0 * (sp + sp0));
            (dx, p0 * off + sk * (p - p0) / (sp + sp0))
        }
        CurveKind::Cmmm { theta } => {
            let g0 = cmmm_scale(*theta, state) * p0.powf(theta - 1.0);
            let off = x0 - g0;
            let dx = off - g0 * ((theta - 1.0) * r).exp_m1();
            let dy = p0 * off + (1.0 - theta) / theta * g0 * p0 * (theta * r).exp_m1();
            (dx, dy)
        }
        CurveKind::Mixed { opt, exp, epsilon } => {
            let (ox, oy) = trade_deltas(opt, state, p)?;
            let (ex, ey) = trade_deltas(exp, state, p)?;
            ((1.0 - epsilon) * ox + epsilon * ex, (1.0 - epsilon) * oy + epsilon * ey)
        }
        _ => {
            let dx = shortfall(kind, state, p);
            (dx, p * dx - shortfall_integral(kind, state, p)?)
        }
    })
}

/// Outcome of one trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeRecord {
    pub t: usize,
    pub p_trad: f64,
    /// Asset delta from the AMM's side (positive = AMM sold asset).
    pub dx: f64,
    /// Numeraire delta (positive = AMM received numeraire).
    pub dy: f64,
    /// dy/dx; equals p0 for a null trade.
    pub p_eff: f64,
    pub p0_before: f64,
    pub p0_after: f64,
    /// The trade drained the side's budget before reaching `p_trad`.
    pub partial: bool,
}

/// Move the curve's operating point to `p_trad`, returning the new state and
/// the trade. Reserves are debited by `dx` and credited by `dy`.
pub fn execute_trade(kind: &CurveKind, state: &CurveState, p_trad: f64) -> Result<(CurveState, TradeRecord)> {
    check_price(p_trad)?;
    kind.validate(state)?;
    let p0 = state.p0;
    if p_trad == p0 {
        let rec = TradeRecord {
            t: 0,
            p_trad,
            dx: 0.0,
            dy: 0.0,
            p_eff: p0,
            p0_before: p0,
            p0_after: p0,
            partial: false,
        };
        return Ok((*state, rec));
    }

    let (dx, dy) = trade_deltas(kind, state, p_trad)?;
    let (x1, y1) = (state.x0 - dx, state.y0 + dy);
    let tol = 1e-12 * (state.x0 + state.y0 / p0).max(1e-300);
    if x1 < -tol || y1 < -tol * p0 {
        return Err(Error::ReserveExhausted { p_trad });
    }
    let (x1, y1) = (x1.max(0.0), y1.max(0.0));

    let partial = if p_trad > p0 {
        x1 == 0.0 && state.x0 > 0.0
    } else {
        (x1 - (state.x0 + state.y0 / p0)).abs() <= tol && state.y0 > 0.0
    };
    let p0_after = if kind.continuous_at(state, p_trad) {
        p_trad
    } else {
        match kind {
            CurveKind::OptimalGaussian(_) | CurveKind::OptimalLognormal { .. } => {
                let cap = if p_trad > p0 { kind.buy_cap(state) } else { kind.sell_cap(state) };
                let c = match kind {
                    CurveKind::OptimalGaussian(o) | CurveKind::OptimalLognormal { params: o, .. } => {
                        if p_trad > p0 {
                            o.c
                        } else {
                            o.c_sell
                        }
                    }
                    _ => 0.0,
                };
                // a continuous branch that ran dry leaves the price at its edge
                match cap {
                    Some(cap) if c > 0.0 => cap,
                    _ => p0,
                }
            }
            _ => p0,
        }
    };
    let p_eff = if dx != 0.0 { dy / dx } else { p0 };
    let rec = TradeRecord {
        t: 0,
        p_trad,
        dx,
        dy,
        p_eff,
        p0_before: p0,
        p0_after,
        partial,
    };
    Ok((
        CurveState {
            p0: p0_after,
            x0: x1,
            y0: y1,
        },
        rec,
    ))
}

/// CMMM weight that puts the marginal price at `p_hat` for reserves (x, y).
pub fn cmmm_theta(p_hat: f64, x: f64, y: f64) -> Result<f64> {
    check_price(p_hat)?;
    if !(x >= 0.0 && y >= 0.0) || (x == 0.0 && y == 0.0) {
        return Err(domain(format!("need x > 0 or y > 0, got x={x}, y={y}")));
    }
    Ok(p_hat * x / (p_hat * x + y))
}

pub fn marginal_price(kind: &CurveKind, state: &CurveState) -> Result<f64> {
    match kind {
        CurveKind::Cmmm { theta } => {
            if state.x0 == 0.0 {
                return Err(domain("marginal price undefined with zero asset reserves"));
            }
            Ok(theta * state.y0 / ((1.0 - theta) * state.x0))
        }
        CurveKind::Cpmm { .. } => {
            if state.x0 == 0.0 {
                return Err(domain("marginal price undefined with zero asset reserves"));
            }
            Ok(state.y0 / state.x0)
        }
        _ => Ok(state.p0),
    }
}

/// (1 - eps) * g_opt(p) + eps * g_exp(p), both evaluated on the same state.
pub fn mixed_demand(opt: &CurveKind, exp: &CurveKind, epsilon: f64, state: &CurveState, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(validation(format!("epsilon must be in [0,1], got {epsilon}")));
    }
    check_price(p)?;
    Ok((1.0 - epsilon) * demand_unchecked(opt, state, p) + epsilon * demand_unchecked(exp, state, p))
}

/// Price at which the curve holds `x` units of asset, by bisection in log price.
///
/// Only meaningful where g is strictly decreasing; for flat stretches the
/// returned price is some point of the stretch.
pub fn invert_demand(kind: &CurveKind, state: &CurveState, x: f64) -> Result<f64> {
    let g = |p: f64| demand_unchecked(kind, state, p);
    let mut lo = state.p0;
    let mut hi = state.p0;
    // g is non-increasing: widen until g(lo) >= x >= g(hi)
    let mut tries = 0;
    while g(lo) < x {
        lo *= 0.5;
        tries += 1;
        if tries > 200 {
            return Err(domain(format!("demand never reaches {x}")));
        }
    }
    tries = 0;
    while g(hi) > x {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(domain(format!("demand never falls to {x}")));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Curve constants that make the optimal Gaussian curve sell its whole buy
/// budget `x_tilde` at `p0 + depth` and spend its numeraire at `p0 - depth`.
pub fn gaussian_depth_constants(gain: f64, state: &CurveState, x_tilde: f64, depth: f64) -> (f64, f64) {
    let a = gain / (1.0 - gain);
    let d = depth.powf(a);
    (x_tilde / d, (state.y0 / state.p0) / d)
}

/// Lognormal analogue of [`gaussian_depth_constants`] with the budget
/// exhausted at `p0 * exp(±log_depth)`.
pub fn lognormal_depth_constants(gain: f64, state: &CurveState, x_tilde: f64, log_depth: f64) -> (f64, f64) {
    let a = gain / (1.0 - gain);
    let up = (1.0 - (-(1.0 - gain) * log_depth).exp()).powf(a);
    let down = (((1.0 - gain) * log_depth).exp() - 1.0).powf(a);
    (x_tilde / up, (state.y0 / state.p0) / down)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn cpmm_demand_and_trade() {
        let s = CurveState::cpmm(1.0, 100.0).unwrap();
        let k = CurveKind::cpmm_through(&s);
        assert!(close(demand(&k, &s, 1.0).unwrap(), 100.0, 1e-15));
        let (s1, r) = execute_trade(&k, &s, 4.0).unwrap();
        assert!(close(r.dx, 50.0, 1e-12));
        assert!(close(r.dy, 100.0, 1e-12));
        assert!(close(r.p_eff, 2.0, 1e-12));
        assert!(close(s1.p0, 4.0, 1e-15));
        assert!(close(marginal_price(&k, &s1).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn csmm_step_sells_point_mass() {
        let s = CurveState::new(2.0, 10.0, 20.0).unwrap();
        assert_eq!(demand(&CurveKind::Csmm, &s, 1.0).unwrap(), 20.0);
        let (s1, r) = execute_trade(&CurveKind::Csmm, &s, 3.0).unwrap();
        assert_eq!(r.dx, 10.0);
        assert_eq!(r.dy, 20.0);
        assert_eq!(r.p_eff, 2.0);
        assert_eq!(s1.p0, 2.0);
        assert!(r.partial);
        // sell side: all numeraire converted at p0
        let (_, r) = execute_trade(&CurveKind::Csmm, &s, 1.0).unwrap();
        assert_eq!(r.dx, -10.0);
        assert_eq!(r.dy, -20.0);
    }

    #[test]
    fn null_trade() {
        let s = CurveState::cpmm(3.0, 7.0).unwrap();
        for k in [CurveKind::Csmm, CurveKind::cpmm_through(&s), CurveKind::Cmmm { theta: 0.3 }] {
            let (_, r) = execute_trade(&k, &s, 3.0).unwrap();
            assert_eq!((r.dx, r.dy), (0.0, 0.0));
        }
    }

    #[test]
    fn cmmm_theta_examples() {
        assert_eq!(cmmm_theta(2.0, 1.0, 2.0).unwrap(), 0.5);
        assert_eq!(cmmm_theta(1.0, 100.0, 100.0).unwrap(), 0.5);
        let th = cmmm_theta(4.0, 1.0, 4.0).unwrap();
        let s = CurveState::new(4.0, 1.0, 4.0).unwrap();
        assert_eq!(marginal_price(&CurveKind::Cmmm { theta: th }, &s).unwrap(), 4.0);
        assert!(cmmm_theta(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn marginal_prices() {
        let s = CurveState::new(2.0, 10.0, 20.0).unwrap();
        assert_eq!(marginal_price(&CurveKind::Cmmm { theta: 0.5 }, &s).unwrap(), 2.0);
        let s = CurveState::new(4.0, 50.0, 200.0).unwrap();
        assert_eq!(marginal_price(&CurveKind::Cpmm { k: 1e4 }, &s).unwrap(), 4.0);
        let s = CurveState::new(1.5, 1.0, 1.0).unwrap();
        assert_eq!(marginal_price(&CurveKind::Csmm, &s).unwrap(), 1.5);
    }

    #[test]
    fn zero_constant_optimal_is_the_step() {
        let s = CurveState::new(2.0, 10.0, 20.0).unwrap();
        let opt = CurveKind::OptimalGaussian(OptimalParams {
            gain: 0.5,
            c: 0.0,
            c_sell: 0.0,
            x_tilde: 10.0,
        });
        for p in [0.5, 1.0, 1.9, 2.1, 5.0] {
            assert_eq!(demand(&opt, &s, p).unwrap(), demand(&CurveKind::Csmm, &s, p).unwrap());
        }
    }

    #[test]
    fn gaussian_optimal_prices_at_posterior_mean() {
        let s = CurveState::cpmm(10.0, 1.0).unwrap();
        let gain = 0.3;
        let (c, cs) = gaussian_depth_constants(gain, &s, 1.0, 5.0);
        let kind = CurveKind::OptimalGaussian(OptimalParams {
            gain,
            c,
            c_sell: cs,
            x_tilde: 1.0,
        });
        for pt in [7.0, 9.5, 10.5, 13.0] {
            let (_, r) = execute_trade(&kind, &s, pt).unwrap();
            let beta = (1.0 - gain) * 10.0 + gain * pt;
            assert!(close(r.p_eff, beta, 1e-12), "pt={pt} p_eff={} beta={beta}", r.p_eff);
            assert!(!r.partial);
        }
    }

    #[test]
    fn lognormal_optimal_prices_at_posterior_mean() {
        let p0 = 2.0;
        let s = CurveState::cpmm(p0, 1.0).unwrap();
        let gain = 0.4;
        let (c, cs) = lognormal_depth_constants(gain, &s, 1.0, 1.0);
        let kind = CurveKind::optimal_lognormal(
            p0,
            OptimalParams {
                gain,
                c,
                c_sell: cs,
                x_tilde: 1.0,
            },
        );
        for pt in [1.2, 1.9, 2.2, 4.0] {
            let (_, r) = execute_trade(&kind, &s, pt).unwrap();
            let beta = pt.powf(gain) * p0.powf(1.0 - gain);
            assert!(close(r.p_eff, beta, 1e-9), "pt={pt} p_eff={} beta={beta}", r.p_eff);
        }
    }

    #[test]
    fn depth_exhausts_budget() {
        let s = CurveState::cpmm(10.0, 1.0).unwrap();
        let (c, cs) = gaussian_depth_constants(0.5, &s, 1.0, 2.0);
        let kind = CurveKind::OptimalGaussian(OptimalParams {
            gain: 0.5,
            c,
            c_sell: cs,
            x_tilde: 1.0,
        });
        let (s1, r) = execute_trade(&kind, &s, 20.0).unwrap();
        assert!(r.partial);
        assert_eq!(s1.x0, 0.0);
        assert!(close(s1.p0, 12.0, 1e-12));
        let (s2, r) = execute_trade(&kind, &s, 1.0).unwrap();
        assert!(r.partial);
        assert!(s2.y0 >= 0.0);
        assert!(close(s2.p0, 8.0, 1e-12));
    }

    #[test]
    fn mixed_curve_recovers_trader_price() {
        let s = CurveState::cpmm(1.0, 1.0).unwrap();
        let exp = CurveKind::cpmm_through(&s);
        let kind = CurveKind::Mixed {
            opt: Box::new(CurveKind::Csmm),
            exp: Box::new(exp.clone()),
            epsilon: 0.01,
        };
        let (s1, r) = execute_trade(&kind, &s, 1.21).unwrap();
        assert_eq!(r.p0_after, 1.21);
        let p = invert_demand(&kind, &s, s1.x0).unwrap();
        assert!((p - 1.21).abs() < 1e-9);
        assert_eq!(
            mixed_demand(&CurveKind::Csmm, &exp, 0.0, &s, 1.5).unwrap(),
            demand(&CurveKind::Csmm, &s, 1.5).unwrap()
        );
        assert_eq!(
            mixed_demand(&CurveKind::Csmm, &exp, 1.0, &s, 1.5).unwrap(),
            demand(&exp, &s, 1.5).unwrap()
        );
    }

    #[test]
    fn rejects_bad_prices() {
        let s = CurveState::cpmm(1.0, 1.0).unwrap();
        assert_eq!(demand(&CurveKind::Csmm, &s, 0.0).unwrap_err().kind(), "domain");
        assert_eq!(execute_trade(&CurveKind::Csmm, &s, -1.0).unwrap_err().kind(), "domain");
    }
}
