//! Expectation-maximization for (sigma, eta) of the random-walk model.
//!
//! The E-step runs the filter and smoother; the M-step is
//! sigma^2 = mean(A), eta^2 = mean(B) with
//!
//! ```text
//! A_t = E[(x_t - x_{t-1})^2 | data],   B_t = E[(y_t - x_t)^2 | data]
//! ```
//!
//! The state before the first observation has a fixed Gaussian prior.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::kalman::{run_filter, Prior};
use super::smoother::{rts_smooth, SmoothedPath};
use crate::error::{validation, Error, Result};

/// Floor on estimated scales; reaching it is flagged on the estimate.
pub const SCALE_FLOOR: f64 = 1e-9;
/// Minimum observations for an EM fit.
pub const MIN_OBSERVATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    /// Stop when the relative log-likelihood or parameter change drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial (sigma, eta); method of moments on first differences when absent.
    pub guesses: Option<(f64, f64)>,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tol: 1e-6,
            max_iter: 100,
            guesses: None,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(validation("em needs tol > 0 and max_iter >= 1"));
        }
        if let Some((s, e)) = self.guesses {
            if !(s >= 0.0 && e >= 0.0 && s.is_finite() && e.is_finite()) {
                return Err(validation("em guesses must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmEstimate {
    pub sigma_hat: f64,
    pub eta_hat: f64,
    /// Observed-data log-likelihood at the final estimate.
    pub loglik: f64,
    /// Expected complete-data log-likelihood at the final estimate.
    pub q: f64,
    pub iterations: usize,
    pub window: Range<usize>,
    pub weights: Option<Vec<f64>>,
    /// Log-likelihood before each M-step, then at the final estimate.
    pub trace: Vec<f64>,
    /// A scale hit the floor.
    pub floored: bool,
    pub smoothed: SmoothedPath,
}

/// Expected sufficient statistics for one E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub loglik: f64,
    pub smoothed: SmoothedPath,
}

/// sigma^2 = eta^2 = var(diff(obs)) / 2.
pub fn moment_guesses(obs: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = obs.windows(2).map(|w| w[1] - w[0]).collect();
    if d.is_empty() {
        return (SCALE_FLOOR, SCALE_FLOOR);
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64;
    let s = (var / 2.0).sqrt().max(SCALE_FLOOR);
    (s, s)
}

/// Prior centred on the first observation with the moment variance.
pub fn default_prior(obs: &[f64]) -> Prior {
    let (s, _) = moment_guesses(obs);
    Prior {
        mean: obs.first().copied().unwrap_or(0.0),
        variance: s * s,
    }
}

/// E-step with per-observation weights (noise variance eta^2 / w_t).
pub fn weighted_e_step(obs: &[f64], sigma: f64, eta: f64, weights: &[f64], prior: Prior) -> Result<EStep> {
    let e2 = eta * eta;
    let r: Vec<f64> = weights.iter().map(|w| e2 / w).collect();
    let run = run_filter(obs, sigma * sigma, &r, prior)?;
    let sm = rts_smooth(&run);
    let n = obs.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (t, y) in obs.iter().enumerate() {
        let (pm, pv) = if t == 0 {
            (sm.initial_mean, sm.initial_variance)
        } else {
            (sm.means[t - 1], sm.variances[t - 1])
        };
        let d = sm.means[t] - pm;
        a.push((d * d + sm.variances[t] + pv - 2.0 * sm.lag_one_cov[t]).max(0.0));
        let e = y - sm.means[t];
        b.push(e * e + sm.variances[t]);
    }
    Ok(EStep {
        a,
        b,
        loglik: run.loglik,
        smoothed: sm,
    })
}

/// Unweighted E-step with the default prior.
pub fn em_e_step(obs: &[f64], sigma: f64, eta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if obs.len() < 2 {
        return Err(validation("e-step needs at least 2 observations"));
    }
    let e = weighted_e_step(obs, sigma, eta, &vec![1.0; obs.len()], default_prior(obs))?;
    Ok((e.a, e.b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MStep {
    pub sigma: f64,
    pub eta: f64,
    pub floored: bool,
}

/// sigma = sqrt(mean A), eta = sqrt(mean B), floored at 1e-9.
pub fn em_m_step(a: &[f64], b: &[f64]) -> Result<MStep> {
    if a.is_empty() || b.is_empty() {
        return Err(validation("m-step needs non-empty statistics"));
    }
    let s = (a.iter().sum::<f64>() / a.len() as f64).sqrt();
    let e = (b.iter().sum::<f64>() / b.len() as f64).sqrt();
    Ok(MStep {
        sigma: s.max(SCALE_FLOOR),
        eta: e.max(SCALE_FLOOR),
        floored: !(s > SCALE_FLOOR && e > SCALE_FLOOR),
    })
}

/// Expected complete-data log-likelihood (standard -n/2 log sigma^2 form).
pub fn expected_complete_loglik(e: &EStep, sigma: f64, eta: f64, weights: &[f64]) -> f64 {
    let n = e.a.len() as f64;
    let (s2, e2) = (sigma * sigma, eta * eta);
    let sa: f64 = e.a.iter().sum();
    let sb: f64 = e.b.iter().zip(weights).map(|(b, w)| w * b).sum();
    let lw: f64 = weights.iter().map(|w| w.ln()).sum();
    -n * (2.0 * PI).ln() - 0.5 * n * s2.ln() - 0.5 * n * e2.ln() + 0.5 * lw - sa / (2.0 * s2) - sb / (2.0 * e2)
}

/// Most recent `window` observations (all of them if the window is longer).
pub fn truncate_window(history: &[f64], window: usize) -> Result<&[f64]> {
    if window < MIN_OBSERVATIONS {
        return Err(validation(format!("window must be >= {MIN_OBSERVATIONS}, got {window}")));
    }
    Ok(&history[history.len().saturating_sub(window)..])
}

pub(crate) fn rel_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-300)
}

/// EM from `guesses` (or moment guesses) with the default prior.
pub fn run_em(obs: &[f64], guesses: Option<(f64, f64)>, cfg: &EmConfig) -> Result<EmEstimate> {
    run_em_with_prior(obs, guesses, default_prior(obs), cfg)
}

pub fn run_em_with_prior(obs: &[f64], guesses: Option<(f64, f64)>, prior: Prior, cfg: &EmConfig) -> Result<EmEstimate> {
    cfg.validate()?;
    if obs.len() < MIN_OBSERVATIONS {
        return Err(validation(format!("em needs >= {MIN_OBSERVATIONS} observations, got {}", obs.len())));
    }
    let ones = vec![1.0; obs.len()];
    let (mut s, mut e) = guesses.or(cfg.guesses).unwrap_or_else(|| moment_guesses(obs));
    let mut floored = s < SCALE_FLOOR || e < SCALE_FLOOR;
    s = s.max(SCALE_FLOOR);
    e = e.max(SCALE_FLOOR);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let est = weighted_e_step(obs, s, e, &ones, prior)?;
        if !est.loglik.is_finite() {
            return Err(Error::NonFinite {
                iterations,
                sigma: s,
                eta: e,
            });
        }
        let converged = trace.last().is_some_and(|&prev| rel_change(est.loglik, prev) < cfg.tol);
        trace.push(est.loglik);
        if converged || iterations == cfg.max_iter {
            let q = expected_complete_loglik(&est, s, e, &ones);
            return Ok(EmEstimate {
                sigma_hat: s,
                eta_hat: e,
                loglik: est.loglik,
                q,
                iterations,
                window: 0..obs.len(),
                weights: None,
                trace,
                floored,
                smoothed: est.smoothed,
            });
        }
        let m = em_m_step(&est.a, &est.b)?;
        iterations += 1;
        floored |= m.floored;
        let small_step = rel_change(m.sigma, s) < cfg.tol && rel_change(m.eta, e) < cfg.tol;
        s = m.sigma;
        e = m.eta;
        if small_step {
            // one more E-step reports the likelihood at the final parameters
            let est = weighted_e_step(obs, s, e, &ones, prior)?;
            trace.push(est.loglik);
            let q = expected_complete_loglik(&est, s, e, &ones);
            return Ok(EmEstimate {
                sigma_hat: s,
                eta_hat: e,
                loglik: est.loglik,
                q,
                iterations,
                window: 0..obs.len(),
                weights: None,
                trace,
                floored,
                smoothed: est.smoothed,
            });
        }
    }
}
