//! Market makers: what curve is published before each trade and how the
//! maker's estimate and reserves evolve afterwards.

use crate::curves::{
    cmmm_theta, gaussian_depth_constants, lognormal_depth_constants, CurveKind, CurveState, OptimalParams,
    TradeRecord,
};
use crate::error::Result;
use crate::filters::{AdaptiveKalman, Estimation, KalmanState, Prior};
use crate::market::Dynamics;
use crate::optimal::lognormal_operating_point;

use super::config::{CurveChoice, MakerSpec, ScenarioConfig};

/// Below this gain the belief ignores the trade and the curve is flat at p0.
const FLAT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Maker {
    spec: MakerSpec,
    dynamics: Dynamics,
    liquidity: f64,
    depth: f64,
    adaptive_curve: CurveChoice,
    filter: Option<AdaptiveKalman>,
    /// Reserves carried between trades by curves that keep inventory.
    reserves: CurveState,
}

/// What the maker shows the trader.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    pub kind: CurveKind,
    pub state: CurveState,
}

impl Maker {
    pub fn new(cfg: &ScenarioConfig, maker: MakerSpec) -> Result<Self> {
        maker.validate()?;
        let dynamics = cfg.market.dynamics;
        let to_filter = |p: f64| match dynamics {
            Dynamics::Additive => p,
            Dynamics::Lognormal => p.ln(),
        };
        let filter = match maker.estimation() {
            None => None,
            Some(est) => {
                let prior = Prior {
                    mean: to_filter(cfg.p_init),
                    variance: 0.0,
                };
                let (s, e) = match est {
                    Estimation::Known => (cfg.market.sigma, cfg.market.eta),
                    _ => cfg.akf.initial,
                };
                Some(AdaptiveKalman::new(cfg.adaptive_config(est), prior, s, e)?)
            }
        };
        let l = cfg.liquidity;
        let reserves = match maker {
            MakerSpec::StaticCmmm { theta } => CurveState::cmmm(theta, cfg.p_init, l)?,
            _ => CurveState::cpmm(cfg.p_init, l)?,
        };
        Ok(Maker {
            spec: maker,
            dynamics,
            liquidity: l,
            depth: cfg.curve.depth,
            adaptive_curve: cfg.curve.adaptive,
            filter,
            reserves,
        })
    }

    pub fn spec(&self) -> MakerSpec {
        self.spec
    }

    pub fn filter(&self) -> Option<&AdaptiveKalman> {
        self.filter.as_ref()
    }

    /// Known-parameter makers follow the true scales when they move.
    pub fn set_true_params(&mut self, sigma: f64, eta: f64) {
        if let (Some(f), Some(Estimation::Known)) = (&mut self.filter, self.spec.estimation()) {
            f.set_params(sigma, eta);
        }
    }

    /// Fixed point of the current beta: the price the next curve starts at.
    fn operating_point(f: &AdaptiveKalman, dynamics: Dynamics) -> f64 {
        let s = f.state();
        match dynamics {
            Dynamics::Additive => s.mean,
            Dynamics::Lognormal => {
                let k = f.next_gain();
                let m = f.predictive_variance();
                if k < 1.0 {
                    lognormal_operating_point(s.mean, (1.0 - k) * m, k)
                } else {
                    s.mean.exp()
                }
            }
        }
    }

    fn optimal_quote(&self, f: &AdaptiveKalman, c: Option<f64>, depth: f64, x_tilde: f64) -> Result<Quote> {
        let p0 = Self::operating_point(f, self.dynamics);
        let l = self.liquidity;
        let state = CurveState::new(p0, l, p0 * l)?;
        let k = f.next_gain();
        if k < FLAT_GAIN {
            return Ok(Quote {
                kind: CurveKind::Csmm,
                state,
            });
        }
        let spread = (f.predictive_variance() + f.params().1.powi(2)).sqrt();
        let (c, c_sell) = match c {
            Some(c) => (c, c),
            None => match self.dynamics {
                Dynamics::Additive => gaussian_depth_constants(k, &state, x_tilde, depth * spread),
                Dynamics::Lognormal => lognormal_depth_constants(k, &state, x_tilde, depth * spread),
            },
        };
        let params = OptimalParams {
            gain: k.min(1.0 - 1e-15),
            c,
            c_sell,
            x_tilde,
        };
        let kind = match self.dynamics {
            Dynamics::Additive => CurveKind::OptimalGaussian(params),
            Dynamics::Lognormal => CurveKind::optimal_lognormal(p0, params),
        };
        Ok(Quote { kind, state })
    }

    pub fn quote(&self) -> Result<Quote> {
        match (self.spec, &self.filter) {
            (MakerSpec::StaticCpmm, _) => Ok(Quote {
                kind: CurveKind::cpmm_through(&self.reserves),
                state: self.reserves,
            }),
            (MakerSpec::StaticCmmm { theta }, _) => Ok(Quote {
                kind: CurveKind::Cmmm { theta },
                state: self.reserves,
            }),
            (
                MakerSpec::OptimalFamily {
                    c,
                    depth,
                    x_tilde,
                    epsilon,
                },
                Some(f),
            ) => {
                let x_tilde = x_tilde.unwrap_or(self.liquidity).min(self.liquidity);
                let q = match depth {
                    Some(d) => self.optimal_quote(f, None, d, x_tilde)?,
                    None => self.optimal_quote(f, Some(c), 0.0, x_tilde)?,
                };
                if epsilon == 0.0 {
                    return Ok(q);
                }
                Ok(Quote {
                    kind: CurveKind::Mixed {
                        exp: Box::new(CurveKind::cpmm_through(&q.state)),
                        opt: Box::new(q.kind),
                        epsilon,
                    },
                    state: q.state,
                })
            }
            (_, Some(f)) => match self.adaptive_curve {
                CurveChoice::Optimal => self.optimal_quote(f, None, self.depth, self.liquidity),
                CurveChoice::Cmmm => {
                    let p_hat = Self::operating_point(f, self.dynamics);
                    let (x, y) = (self.reserves.x0, self.reserves.y0);
                    let theta = cmmm_theta(p_hat, x, y)?;
                    Ok(Quote {
                        kind: CurveKind::Cmmm { theta },
                        state: CurveState::new(p_hat, x, y)?,
                    })
                }
            },
            (_, None) => unreachable!("filter makers always carry a filter"),
        }
    }

    /// Book the trade: carry reserves and feed the trader price to the filter.
    pub fn settle(&mut self, after: CurveState, rec: &TradeRecord) -> Result<()> {
        let carries = match self.spec {
            MakerSpec::StaticCpmm | MakerSpec::StaticCmmm { .. } => true,
            MakerSpec::OptimalFamily { .. } => false,
            _ => self.adaptive_curve == CurveChoice::Cmmm,
        };
        if carries {
            self.reserves = after;
        }
        if let Some(f) = &mut self.filter {
            let y = match self.dynamics {
                Dynamics::Additive => rec.p_trad,
                Dynamics::Lognormal => rec.p_trad.ln(),
            };
            f.observe(y)?;
        }
        Ok(())
    }

    /// Price the maker would recommend after the latest trade: the filter's
    /// posterior mean, or the curve's marginal price for static makers.
    pub fn estimate(&self, rec: &TradeRecord) -> f64 {
        match &self.filter {
            Some(f) => {
                let KalmanState { mean, variance, .. } = f.state();
                match self.dynamics {
                    Dynamics::Additive => mean,
                    Dynamics::Lognormal => (mean + 0.5 * variance).exp(),
                }
            }
            None => rec.p0_after,
        }
    }
}
