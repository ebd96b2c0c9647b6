//! Hidden external price process, rational traders and adversarial traders.
//!
//! All randomness in a simulation flows through a [`ChaCha12Rng`] built by
//! [`stream_rng`], so one seed reproduces a whole run bit for bit and separate
//! streams stay independent when runs execute in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};

/// Generator for a given seed and stream id.
///
/// The stream id separates independent consumers of the same seed (market
/// path, block experiments, ...), so adding a consumer never shifts another
/// consumer's draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One standard-normal draw.
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// p' = p + N(0, sigma^2)
    #[default]
    Additive,
    /// p' = p * exp(N(0, sigma^2)); sigma and eta are in log units.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Price-jump scale.
    pub sigma: f64,
    /// Trader-noise scale.
    pub eta: f64,
    #[serde(default)]
    pub dynamics: Dynamics,
}

impl MarketParams {
    pub fn new(sigma: f64, eta: f64, dynamics: Dynamics) -> Result<Self> {
        let p = MarketParams {
            sigma,
            eta,
            dynamics,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn additive(sigma: f64, eta: f64) -> Result<Self> {
        Self::new(sigma, eta, Dynamics::Additive)
    }

    pub fn lognormal(sigma: f64, eta: f64) -> Result<Self> {
        Self::new(sigma, eta, Dynamics::Lognormal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(validation(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(validation(format!("eta must be >= 0, got {}", self.eta)));
        }
        Ok(())
    }

    /// Apply a standard-normal shock `z` with scale `scale` to `p`.
    fn shock(&self, p: f64, scale: f64, z: f64) -> Result<f64> {
        match self.dynamics {
            Dynamics::Additive => Ok(p + scale * z),
            Dynamics::Lognormal => {
                if p <= 0.0 {
                    return Err(domain(format!("lognormal price must be > 0, got {p}")));
                }
                Ok(p * (scale * z).exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceState {
    pub p_ext: f64,
    pub t: usize,
}

/// How far an adversary displaces its reported price, in units of eta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BiasMagnitude {
    Uniform { lo: f64, hi: f64 },
    Fixed { fixed: f64 },
}

impl Default for BiasMagnitude {
    fn default() -> Self {
        BiasMagnitude::Uniform { lo: 5.0, hi: 7.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryParams {
    /// Probability that a given step's trader is adversarial.
    pub alpha: f64,
    #[serde(default)]
    pub bias: BiasMagnitude,
    #[serde(default)]
    pub direction: Direction,
}

impl AdversaryParams {
    pub fn new(alpha: f64, direction: Direction) -> Result<Self> {
        let a = AdversaryParams {
            alpha,
            bias: BiasMagnitude::default(),
            direction,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(validation(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        match self.bias {
            BiasMagnitude::Uniform { lo, hi } => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(validation(format!("bias range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")));
                }
            }
            BiasMagnitude::Fixed { fixed } => {
                if !(fixed > 0.0 && fixed.is_finite()) {
                    return Err(validation(format!("bias magnitude must be > 0, got {fixed}")));
                }
            }
        }
        Ok(())
    }

    fn draw_magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.bias {
            BiasMagnitude::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            BiasMagnitude::Fixed { fixed } => fixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolOfVolParams {
    /// Per-trade std of the random walk applied to sigma and eta.
    pub sigma_metavol: f64,
    /// Lower bound kept by both evolved scales.
    pub floor: f64,
}

impl VolOfVolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_metavol >= 0.0 && self.sigma_metavol.is_finite()) {
            return Err(validation("sigma_metavol must be >= 0"));
        }
        if !(self.floor > 0.0) {
            return Err(validation("volvol floor must be > 0"));
        }
        Ok(())
    }
}

pub fn step_price<R: Rng + ?Sized>(
    state: &PriceState,
    params: &MarketParams,
    rng: &mut R,
) -> Result<PriceState> {
    let z = normal(rng);
    Ok(PriceState {
        p_ext: params.shock(state.p_ext, params.sigma, z)?,
        t: state.t + 1,
    })
}

pub fn observe_trader<R: Rng + ?Sized>(p_ext: f64, params: &MarketParams, rng: &mut R) -> Result<f64> {
    let z = normal(rng);
    params.shock(p_ext, params.eta, z)
}

/// Trader price pushed `bias * eta` away from the external price (in log
/// space for lognormal dynamics).
pub fn observe_adversarial<R: Rng + ?Sized>(
    p_ext: f64,
    params: &MarketParams,
    adv: &AdversaryParams,
    rng: &mut R,
) -> Result<f64> {
    let sign = match adv.direction {
        Direction::Up => 1.0,
        Direction::Down => -1.0,
    };
    let offset = sign * adv.draw_magnitude(rng) * params.eta;
    match params.dynamics {
        Dynamics::Additive => Ok(p_ext + offset),
        Dynamics::Lognormal => {
            if p_ext <= 0.0 {
                return Err(domain(format!("lognormal price must be > 0, got {p_ext}")));
            }
            Ok(p_ext * offset.exp())
        }
    }
}

pub fn step_market_params<R: Rng + ?Sized>(
    params: &MarketParams,
    vv: &VolOfVolParams,
    rng: &mut R,
) -> MarketParams {
    let zs = normal(rng);
    let ze = normal(rng);
    MarketParams {
        sigma: (params.sigma + vv.sigma_metavol * zs).max(vv.floor),
        eta: (params.eta + vv.sigma_metavol * ze).max(vv.floor),
        dynamics: params.dynamics,
    }
}

/// One simulated time step as seen by the experiment layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketStep {
    pub t: usize,
    pub p_ext: f64,
    pub p_trad: f64,
    pub adversarial: bool,
    /// Scales in force at this step (they move under vol-of-vol).
    pub sigma: f64,
    pub eta: f64,
}

/// Stateful market simulator: price path, trader arrivals and optional
/// adversaries and vol-of-vol, all driven by one generator.
///
/// Draw order per step is fixed: vol-of-vol shocks, price shock, adversary
/// coin, trader draw. Adversary and vol-of-vol draws only happen when those
/// features are configured.
#[derive(Debug, Clone)]
pub struct Market {
    params: MarketParams,
    state: PriceState,
    adversary: Option<AdversaryParams>,
    volvol: Option<VolOfVolParams>,
    rng: ChaCha12Rng,
}

impl Market {
    pub fn new(
        params: MarketParams,
        p_init: f64,
        adversary: Option<AdversaryParams>,
        volvol: Option<VolOfVolParams>,
        rng: ChaCha12Rng,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(a) = &adversary {
            a.validate()?;
        }
        if let Some(v) = &volvol {
            v.validate()?;
        }
        if params.dynamics == Dynamics::Lognormal && p_init <= 0.0 {
            return Err(domain("lognormal start price must be > 0"));
        }
        Ok(Market {
            params,
            state: PriceState { p_ext: p_init, t: 0 },
            adversary,
            volvol,
            rng,
        })
    }

    pub fn params(&self) -> MarketParams {
        self.params
    }

    pub fn state(&self) -> PriceState {
        self.state
    }

    pub fn next_step(&mut self) -> Result<MarketStep> {
        if let Some(vv) = &self.volvol {
            self.params = step_market_params(&self.params, vv, &mut self.rng);
        }
        self.state = step_price(&self.state, &self.params, &mut self.rng)?;
        let adversarial = match &self.adversary {
            Some(a) => self.rng.random::<f64>() < a.alpha,
            None => false,
        };
        let p_trad = match (&self.adversary, adversarial) {
            (Some(a), true) => observe_adversarial(self.state.p_ext, &self.params, a, &mut self.rng)?,
            _ => observe_trader(self.state.p_ext, &self.params, &mut self.rng)?,
        };
        Ok(MarketStep {
            t: self.state.t,
            p_ext: self.state.p_ext,
            p_trad,
            adversarial,
            sigma: self.params.sigma,
            eta: self.params.eta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_keeps_price() {
        let mut rng = stream_rng(1, 0);
        let p = MarketParams::additive(0.0, 1.0).unwrap();
        let s = step_price(&PriceState { p_ext: 100.0, t: 0 }, &p, &mut rng).unwrap();
        assert_eq!(s.p_ext, 100.0);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn lognormal_rejects_nonpositive_price() {
        let mut rng = stream_rng(1, 0);
        let p = MarketParams::lognormal(0.1, 0.1).unwrap();
        let err = step_price(&PriceState { p_ext: 0.0, t: 0 }, &p, &mut rng).unwrap_err();
        assert_eq!(err.kind(), "domain");
    }

    #[test]
    fn noiseless_trader_sees_external_price() {
        let mut rng = stream_rng(3, 0);
        let p = MarketParams::additive(1.0, 0.0).unwrap();
        assert_eq!(observe_trader(50.0, &p, &mut rng).unwrap(), 50.0);
    }

    #[test]
    fn adversary_offsets_land_in_band() {
        let mut rng = stream_rng(4, 0);
        let p = MarketParams::additive(1.0, 1.0).unwrap();
        let up = AdversaryParams::new(1.0, Direction::Up).unwrap();
        let down = AdversaryParams::new(1.0, Direction::Down).unwrap();
        for _ in 0..1000 {
            let u = observe_adversarial(100.0, &p, &up, &mut rng).unwrap();
            assert!((105.0..=107.0).contains(&u));
            let d = observe_adversarial(100.0, &p, &down, &mut rng).unwrap();
            assert!((93.0..=95.0).contains(&d));
        }
        let quiet = MarketParams::additive(1.0, 0.0).unwrap();
        assert_eq!(observe_adversarial(100.0, &quiet, &up, &mut rng).unwrap(), 100.0);
    }

    #[test]
    fn zero_metavol_leaves_params() {
        let mut rng = stream_rng(5, 0);
        let p = MarketParams::additive(0.5, 0.25).unwrap();
        let vv = VolOfVolParams {
            sigma_metavol: 0.0,
            floor: 0.01,
        };
        assert_eq!(step_market_params(&p, &vv, &mut rng), p);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MarketParams::additive(-1.0, 0.0).is_err());
        assert!(AdversaryParams::new(1.5, Direction::Up).is_err());
    }
}
