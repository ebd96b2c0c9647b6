//! Robust EM: per-observation noise variance eta^2 / w_t with weights
//! re-estimated from the smoothed residuals.
//!
//! Starting from the equal-weight fit, observations whose expected squared
//! residual B_t is within `gate * eta^2` keep weight 1 and the rest get
//! `robust_weight(B_t, eta)`. The gate is annealed from tight to loose so the
//! fit moves away from the contaminated mode, and eta is re-estimated from
//! the inliers with a truncated chi-square consistency factor.

use serde::{Deserialize, Serialize};

use super::em::{
    default_prior, expected_complete_loglik, rel_change, run_em_with_prior, weighted_e_step, EmConfig, EmEstimate,
    MIN_OBSERVATIONS, SCALE_FLOOR,
};
use super::kalman::Prior;
use crate::error::{validation, Error, Result};

/// Default cap on robust weights.
pub const W_MAX: f64 = 10.0;

/// w = min(w_max, eta^2 / (2 max(B, 1e-12))).
pub fn robust_weight(b: f64, eta: f64) -> f64 {
    robust_weight_capped(b, eta, W_MAX)
}

pub fn robust_weight_capped(b: f64, eta: f64, w_max: f64) -> f64 {
    (eta * eta / (2.0 * b.max(1e-12))).min(w_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustConfig {
    /// Gate schedule in units of eta^2; the last entry is run to convergence.
    pub gates: Vec<f64>,
    /// Iterations per intermediate gate.
    pub inner: usize,
    pub w_max: f64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig {
            gates: vec![1.0, 2.0, 4.0, 9.0, 12.25],
            inner: 10,
            w_max: W_MAX,
        }
    }
}

impl RobustConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gates.is_empty() || self.gates.iter().any(|g| !(*g > 0.0)) {
            return Err(validation("robust gates must be a non-empty list of positive values"));
        }
        if !(self.w_max >= 1.0) {
            return Err(validation("robust w_max must be >= 1"));
        }
        Ok(())
    }

    pub fn final_gate(&self) -> f64 {
        *self.gates.last().unwrap_or(&12.25)
    }
}

/// E[Z^2 | Z^2 <= g] for standard normal Z: the shrinkage of a variance
/// estimated only from residuals inside the gate.
pub fn truncated_variance_factor(g: f64) -> f64 {
    let r = (g / 2.0).sqrt();
    1.0 - (2.0 * g / std::f64::consts::PI).sqrt() * (-g / 2.0).exp() / libm::erf(r)
}

fn gate_weights(b: &[f64], e2: f64, gate: f64, w_max: f64) -> Vec<f64> {
    let eta = e2.sqrt();
    b.iter()
        .map(|&bi| if bi <= gate * e2 { 1.0 } else { robust_weight_capped(bi, eta, w_max) })
        .collect()
}

pub fn run_robust_em(obs: &[f64], guesses: Option<(f64, f64)>, cfg: &EmConfig) -> Result<EmEstimate> {
    run_robust_em_with(obs, guesses, default_prior(obs), cfg, &RobustConfig::default())
}

pub fn run_robust_em_with(
    obs: &[f64],
    guesses: Option<(f64, f64)>,
    prior: Prior,
    cfg: &EmConfig,
    rcfg: &RobustConfig,
) -> Result<EmEstimate> {
    rcfg.validate()?;
    if obs.len() < MIN_OBSERVATIONS {
        return Err(validation(format!("em needs >= {MIN_OBSERVATIONS} observations, got {}", obs.len())));
    }
    let start = run_em_with_prior(obs, guesses, prior, cfg)?;
    let (mut s2, mut e2) = (start.sigma_hat.powi(2), start.eta_hat.powi(2));
    let mut floored = start.floored;
    let mut iterations = start.iterations;
    let mut est = weighted_e_step(obs, s2.sqrt(), e2.sqrt(), &vec![1.0; obs.len()], prior)?;
    let last = rcfg.gates.len() - 1;
    for (gi, &gate) in rcfg.gates.iter().enumerate() {
        let factor = truncated_variance_factor(gate);
        let budget = if gi < last { rcfg.inner } else { cfg.max_iter };
        for _ in 0..budget {
            let w = gate_weights(&est.b, e2, gate, rcfg.w_max);
            est = weighted_e_step(obs, s2.sqrt(), e2.sqrt(), &w, prior)?;
            if !est.loglik.is_finite() {
                return Err(Error::NonFinite {
                    iterations,
                    sigma: s2.sqrt(),
                    eta: e2.sqrt(),
                });
            }
            iterations += 1;
            let new_s2 = est.a.iter().sum::<f64>() / est.a.len() as f64;
            let (sum, count) = est
                .b
                .iter()
                .filter(|&&b| b <= gate * e2)
                .fold((0.0, 0usize), |(s, c), b| (s + b, c + 1));
            // with no inliers left keep the previous scale rather than divide by zero
            let new_e2 = if count > 0 { sum / count as f64 / factor } else { e2 };
            let floor2 = SCALE_FLOOR * SCALE_FLOOR;
            floored |= new_s2 < floor2 || new_e2 < floor2;
            let (new_s2, new_e2) = (new_s2.max(floor2), new_e2.max(floor2));
            let done = rel_change(new_s2, s2) < cfg.tol && rel_change(new_e2, e2) < cfg.tol;
            s2 = new_s2;
            e2 = new_e2;
            if done {
                break;
            }
        }
    }
    let gate = rcfg.final_gate();
    let w = gate_weights(&est.b, e2, gate, rcfg.w_max);
    let fin = weighted_e_step(obs, s2.sqrt(), e2.sqrt(), &w, prior)?;
    let q = expected_complete_loglik(&fin, s2.sqrt(), e2.sqrt(), &w);
    let weights = gate_weights(&fin.b, e2, gate, rcfg.w_max);
    Ok(EmEstimate {
        sigma_hat: s2.sqrt(),
        eta_hat: e2.sqrt(),
        loglik: fin.loglik,
        q,
        iterations,
        window: 0..obs.len(),
        weights: Some(weights),
        // the weighted likelihood changes with the weights, so only the
        // equal-weight stage carries a monotone trace
        trace: start.trace,
        floored,
        smoothed: fin.smoothed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        assert_eq!(robust_weight(0.5, 1.0), 1.0);
        assert!(robust_weight(1e12, 1.0) < 1e-11);
        assert_eq!(robust_weight(1.0 / 20.0, 1.0), 10.0);
        assert_eq!(robust_weight(0.0, 1.0), 10.0);
    }

    #[test]
    fn truncated_factor_limits() {
        // full gate recovers the plain variance; g = 1 gives ~0.2911
        assert!((truncated_variance_factor(100.0) - 1.0).abs() < 1e-12);
        assert!((truncated_variance_factor(1.0) - 0.291_1).abs() < 1e-4);
    }
}
