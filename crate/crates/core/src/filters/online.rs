//! Online adaptive Kalman filter: filters every trade and periodically
//! refits (sigma, eta) by EM or robust EM on recent history.

use serde::{Deserialize, Serialize};

use super::em::{run_em_with_prior, EmConfig, EmEstimate, MIN_OBSERVATIONS};
use super::kalman::{kf_update, KalmanState, Prior};
use super::robust::{robust_weight_capped, run_robust_em_with, RobustConfig};
use crate::error::{validation, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimation {
    /// Parameters are known and never refitted.
    Known,
    Em,
    RobustEm,
}

/// History used by each refit. Written as `"full"` or a trade count in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "WindowRepr", into = "WindowRepr")]
pub enum Window {
    Full,
    Last(usize),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FullWord {
    Full,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum WindowRepr {
    Last(usize),
    Full(FullWord),
}

impl From<WindowRepr> for Window {
    fn from(r: WindowRepr) -> Self {
        match r {
            WindowRepr::Last(n) => Window::Last(n),
            WindowRepr::Full(_) => Window::Full,
        }
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> Self {
        match w {
            Window::Last(n) => WindowRepr::Last(n),
            Window::Full => WindowRepr::Full(FullWord::Full),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub estimation: Estimation,
    pub window: Window,
    /// Refit cadence once the window is full (`Window::Last` only).
    pub refit_every: usize,
    /// First refit happens after this many trades; refits then double
    /// until the window is full.
    pub first_refit: usize,
    pub em: EmConfig,
    pub robust: RobustConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            estimation: Estimation::Em,
            window: Window::Last(256),
            refit_every: 64,
            first_refit: 32,
            em: EmConfig::default(),
            robust: RobustConfig::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if let Window::Last(n) = self.window {
            if n < MIN_OBSERVATIONS {
                return Err(validation(format!("window must be >= {MIN_OBSERVATIONS}, got {n}")));
            }
        }
        if self.refit_every == 0 || self.first_refit < MIN_OBSERVATIONS {
            return Err(validation(format!(
                "refit_every must be >= 1 and first_refit >= {MIN_OBSERVATIONS}"
            )));
        }
        self.em.validate()?;
        self.robust.validate()
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveKalman {
    cfg: AdaptiveConfig,
    state: KalmanState,
    sigma: f64,
    eta: f64,
    prior: Prior,
    history: Vec<f64>,
    /// Filtered states after each observation, for carrying a prior into
    /// windowed refits.
    states: Vec<KalmanState>,
    next_refit: usize,
    last_weight: f64,
    last_fit: Option<EmEstimate>,
}

impl AdaptiveKalman {
    /// `sigma`, `eta` are the parameters used until the first refit (or
    /// forever with `Estimation::Known`).
    pub fn new(cfg: AdaptiveConfig, prior: Prior, sigma: f64, eta: f64) -> Result<Self> {
        cfg.validate()?;
        if !(sigma >= 0.0 && eta >= 0.0 && sigma + eta > 0.0) {
            return Err(validation("sigma, eta must be >= 0 and not both zero"));
        }
        let next_refit = cfg.first_refit;
        Ok(AdaptiveKalman {
            cfg,
            state: KalmanState::from(prior),
            sigma,
            eta,
            prior,
            history: Vec::new(),
            states: Vec::new(),
            next_refit,
            last_weight: 1.0,
            last_fit: None,
        })
    }

    pub fn state(&self) -> KalmanState {
        self.state
    }

    /// Replace the parameters in use (known-parameter filters under
    /// vol-of-vol follow the true scales this way).
    pub fn set_params(&mut self, sigma: f64, eta: f64) {
        self.sigma = sigma;
        self.eta = eta;
    }

    pub fn params(&self) -> (f64, f64) {
        (self.sigma, self.eta)
    }

    /// Weight given to the latest observation (1 unless robust gating fired).
    pub fn last_weight(&self) -> f64 {
        self.last_weight
    }

    pub fn last_fit(&self) -> Option<&EmEstimate> {
        self.last_fit.as_ref()
    }

    /// Predictive variance of the next hidden state: P + sigma^2.
    pub fn predictive_variance(&self) -> f64 {
        self.state.variance + self.sigma * self.sigma
    }

    /// Gain the next trade would receive at unit weight.
    pub fn next_gain(&self) -> f64 {
        let m = self.predictive_variance();
        let s = m + self.eta * self.eta;
        if s > 0.0 {
            m / s
        } else {
            1.0
        }
    }

    pub fn observe(&mut self, y: f64) -> Result<()> {
        let (q, e2) = (self.sigma * self.sigma, self.eta * self.eta);
        let mut w = 1.0;
        if self.cfg.estimation == Estimation::RobustEm {
            let s = self.state.variance + q + e2;
            let v = y - self.state.mean;
            if v * v > self.cfg.robust.final_gate() * s {
                w = robust_weight_capped(v * v, self.eta, self.cfg.robust.w_max);
            }
        }
        self.last_weight = w;
        let (next, _, _) = kf_update(&self.state, y, q, e2 / w);
        self.state = next;
        if self.cfg.estimation != Estimation::Known {
            self.history.push(y);
            self.states.push(next);
            if self.history.len() == self.next_refit {
                self.refit()?;
            }
        }
        Ok(())
    }

    fn refit(&mut self) -> Result<()> {
        let n = self.history.len();
        let (start, prior) = match self.cfg.window {
            Window::Full => (0, self.prior),
            Window::Last(w) if w >= n => (0, self.prior),
            Window::Last(w) => {
                let s = self.states[n - w - 1];
                (
                    n - w,
                    Prior {
                        mean: s.mean,
                        variance: s.variance,
                    },
                )
            }
        };
        let obs = &self.history[start..];
        let guesses = self.last_fit.as_ref().map(|f| (f.sigma_hat, f.eta_hat));
        let mut fit = match self.cfg.estimation {
            Estimation::RobustEm => run_robust_em_with(obs, guesses, prior, &self.cfg.em, &self.cfg.robust)?,
            _ => run_em_with_prior(obs, guesses, prior, &self.cfg.em)?,
        };
        fit.window = start..n;
        self.sigma = fit.sigma_hat;
        self.eta = fit.eta_hat;
        self.last_fit = Some(fit);
        self.next_refit = match self.cfg.window {
            Window::Last(w) if n >= w => n + self.cfg.refit_every,
            Window::Last(w) => (2 * n).min(w.max(n + 1)),
            Window::Full => 2 * n,
        };
        Ok(())
    }
}
