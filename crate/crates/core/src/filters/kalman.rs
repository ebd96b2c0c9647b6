//! Scalar Kalman filter for a random walk observed in Gaussian noise.

use std::f64::consts::PI;

use crate::error::{validation, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub mean: f64,
    pub variance: f64,
    pub gain: f64,
    pub t: u64,
}

impl KalmanState {
    pub fn new(mean: f64, variance: f64) -> Self {
        KalmanState {
            mean,
            variance,
            gain: 0.0,
            t: 0,
        }
    }
}

/// Gaussian belief about the state before the first observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub mean: f64,
    pub variance: f64,
}

impl From<Prior> for KalmanState {
    fn from(p: Prior) -> Self {
        KalmanState::new(p.mean, p.variance)
    }
}

/// One predict + update step with state noise variance `q` and observation
/// noise variance `r`. Returns the new state, the innovation and its variance.
pub fn kf_update(state: &KalmanState, y: f64, q: f64, r: f64) -> (KalmanState, f64, f64) {
    let m = state.variance + q;
    let s = m + r;
    let v = y - state.mean;
    // 1 - K = r / s is computed directly so tiny r keeps full precision
    let (gain, one_minus) = if s > 0.0 { (m / s, r / s) } else { (1.0, 0.0) };
    let next = KalmanState {
        mean: state.mean + gain * v,
        variance: one_minus * m,
        gain,
        t: state.t + 1,
    };
    (next, v, s)
}

/// One step of the known-parameter filter.
pub fn kf_step(state: &KalmanState, p_trad: f64, sigma: f64, eta: f64) -> KalmanState {
    kf_update(state, p_trad, sigma * sigma, eta * eta).0
}

/// Block MSE of the filter after `trades` observations of a fixed price
/// drawn with variance sigma^2: eta^2 sigma^2 / (T sigma^2 + eta^2).
pub fn kf_block_mse(sigma: f64, eta: f64, trades: u64) -> f64 {
    let (s2, e2) = (sigma * sigma, eta * eta);
    e2 * s2 / (trades as f64 * s2 + e2)
}

/// The same quantity obtained by iterating the variance update within a
/// block (no price motion between trades), starting from P = sigma^2.
pub fn block_variance_recursion(sigma: f64, eta: f64, trades: u64) -> f64 {
    let mut s = KalmanState::new(0.0, sigma * sigma);
    for _ in 0..trades {
        s = kf_update(&s, 0.0, 0.0, eta * eta).0;
    }
    s.variance
}

/// A full forward pass, kept for smoothing and likelihood evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub prior: Prior,
    pub q: f64,
    pub states: Vec<KalmanState>,
    /// Predicted variances P_{t|t-1}.
    pub predicted: Vec<f64>,
    /// Observed-data log-likelihood from the innovations.
    pub loglik: f64,
}

/// Filter `obs` with state noise `q` and per-observation noise variances `r`.
pub fn run_filter(obs: &[f64], q: f64, r: &[f64], prior: Prior) -> Result<FilterRun> {
    if obs.len() != r.len() {
        return Err(crate::error::Error::LengthMismatch {
            left: obs.len(),
            right: r.len(),
        });
    }
    if obs.is_empty() {
        return Err(validation("filter needs at least one observation"));
    }
    let mut states = Vec::with_capacity(obs.len());
    let mut predicted = Vec::with_capacity(obs.len());
    let mut loglik = 0.0;
    let mut s = KalmanState::from(prior);
    for (y, ri) in obs.iter().zip(r) {
        predicted.push(s.variance + q);
        let (next, v, var) = kf_update(&s, *y, q, *ri);
        loglik += -0.5 * ((2.0 * PI * var).ln() + v * v / var);
        s = next;
        states.push(s);
    }
    Ok(FilterRun {
        prior,
        q,
        states,
        predicted,
        loglik,
    })
}
