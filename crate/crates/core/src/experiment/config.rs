//! Scenario configuration, read from and written to TOML.
//!
//! ```toml
//! horizon = 100000
//! seeds = [1, 2, 3]
//! p_init = 10000.0
//!
//! [market]
//! sigma = 0.5
//! eta = 0.5
//! dynamics = "additive"
//!
//! [maker]
//! kind = "akf"
//!
//! [akf]
//! window = 256        # or "full"
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::filters::em::MIN_OBSERVATIONS;
use crate::filters::{AdaptiveConfig, EmConfig, Estimation, RobustConfig, Window};
use crate::market::{AdversaryParams, Dynamics, MarketParams, VolOfVolParams};

/// Curve published by the filter-based makers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurveChoice {
    /// Constant-mean curve whose weight puts the marginal price at the estimate.
    #[default]
    Cmmm,
    /// The optimal curve for the current belief, with constants set by `depth`.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub adaptive: CurveChoice,
    /// Optimal curves spend each side's budget this many predictive standard
    /// deviations of the trader price away from p0.
    pub depth: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            adaptive: CurveChoice::Cmmm,
            depth: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MakerSpec {
    /// Kalman filter with the true (sigma, eta).
    Kf,
    /// Kalman filter with EM-estimated parameters.
    Akf,
    /// Kalman filter with robust-EM parameters and innovation gating.
    RobustAkf,
    StaticCpmm,
    StaticCmmm { theta: f64 },
    /// Known-parameter filter publishing the optimal curve with explicit
    /// constants, mixed with a constant-product curve by `epsilon`.
    OptimalFamily {
        #[serde(default)]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_tilde: Option<f64>,
        #[serde(default)]
        epsilon: f64,
    },
}

impl MakerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MakerSpec::Kf => "kf",
            MakerSpec::Akf => "akf",
            MakerSpec::RobustAkf => "robust_akf",
            MakerSpec::StaticCpmm => "static_cpmm",
            MakerSpec::StaticCmmm { .. } => "static_cmmm",
            MakerSpec::OptimalFamily { .. } => "optimal_family",
        }
    }

    /// Estimator behind the maker, if any.
    pub fn estimation(&self) -> Option<Estimation> {
        match self {
            MakerSpec::Kf | MakerSpec::OptimalFamily { .. } => Some(Estimation::Known),
            MakerSpec::Akf => Some(Estimation::Em),
            MakerSpec::RobustAkf => Some(Estimation::RobustEm),
            MakerSpec::StaticCpmm | MakerSpec::StaticCmmm { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MakerSpec::StaticCmmm { theta } if !(theta > 0.0 && theta < 1.0) => {
                Err(validation(format!("static_cmmm theta must be in (0,1), got {theta}")))
            }
            MakerSpec::OptimalFamily {
                c,
                depth,
                x_tilde,
                epsilon,
            } => {
                if !(c >= 0.0) || depth.is_some_and(|d| !(d > 0.0)) || x_tilde.is_some_and(|x| !(x >= 0.0)) {
                    return Err(validation("optimal_family needs c >= 0, depth > 0, x_tilde >= 0"));
                }
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(validation(format!("epsilon must be in [0,1], got {epsilon}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MakerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MakerSpec::StaticCmmm { theta } => write!(f, "static_cmmm:{theta}"),
            m => f.write_str(m.name()),
        }
    }
}

/// Parses `kf`, `akf`, `robust_akf`, `static_cpmm`, `static_cmmm[:theta]`,
/// `optimal_family[:depth]`.
impl FromStr for MakerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<Option<f64>> {
            a.map(|v| v.parse::<f64>().map_err(|_| validation(format!("bad maker argument '{v}'"))))
                .transpose()
        };
        let m = match name {
            "kf" => MakerSpec::Kf,
            "akf" => MakerSpec::Akf,
            "robust_akf" => MakerSpec::RobustAkf,
            "static_cpmm" => MakerSpec::StaticCpmm,
            "static_cmmm" => MakerSpec::StaticCmmm {
                theta: num(arg)?.unwrap_or(0.5),
            },
            "optimal_family" => MakerSpec::OptimalFamily {
                c: 0.0,
                depth: num(arg)?,
                x_tilde: None,
                epsilon: 0.0,
            },
            _ => return Err(validation(format!("unknown maker '{s}'"))),
        };
        if arg.is_some() && !matches!(name, "static_cmmm" | "optimal_family") {
            return Err(validation(format!("maker '{name}' takes no argument")));
        }
        m.validate()?;
        Ok(m)
    }
}

/// Refit settings of the adaptive makers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AkfConfig {
    pub window: Window,
    pub refit_every: usize,
    pub first_refit: usize,
    /// (sigma, eta) used before the first refit, in filter units (log units
    /// for lognormal dynamics).
    pub initial: (f64, f64),
}

impl Default for AkfConfig {
    fn default() -> Self {
        AkfConfig {
            window: Window::Last(256),
            refit_every: 64,
            first_refit: 32,
            initial: (1.0, 1.0),
        }
    }
}

fn default_horizon() -> usize {
    100_000
}
fn default_seeds() -> Vec<u64> {
    (1..=20).collect()
}
fn default_p_init() -> f64 {
    10_000.0
}
fn default_liquidity() -> f64 {
    1.0
}
fn default_burn_in() -> usize {
    1000
}
fn default_market() -> MarketParams {
    MarketParams {
        sigma: 0.5,
        eta: 0.5,
        dynamics: Dynamics::Additive,
    }
}
fn default_maker() -> MakerSpec {
    MakerSpec::Kf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_p_init")]
    pub p_init: f64,
    /// Asset units provisioned to the curve.
    #[serde(default = "default_liquidity")]
    pub liquidity: f64,
    /// Trades before this index are excluded from loss and RMSD summaries.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_market")]
    pub market: MarketParams,
    #[serde(default = "default_maker")]
    pub maker: MakerSpec,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volvol: Option<VolOfVolParams>,
    #[serde(default)]
    pub akf: AkfConfig,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub robust: RobustConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: default_horizon(),
            seeds: default_seeds(),
            p_init: default_p_init(),
            liquidity: default_liquidity(),
            burn_in: default_burn_in(),
            market: default_market(),
            maker: default_maker(),
            curve: CurveConfig::default(),
            adversary: None,
            volvol: None,
            akf: AkfConfig::default(),
            em: EmConfig::default(),
            robust: RobustConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(validation("horizon must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(validation("seeds must be non-empty"));
        }
        if !(self.p_init > 0.0 && self.p_init.is_finite()) {
            return Err(validation(format!("p_init must be > 0, got {}", self.p_init)));
        }
        if !(self.liquidity > 0.0 && self.liquidity.is_finite()) {
            return Err(validation("liquidity must be > 0"));
        }
        if !(self.curve.depth > 0.0) {
            return Err(validation("curve depth must be > 0"));
        }
        self.market.validate()?;
        self.maker.validate()?;
        if let Some(a) = &self.adversary {
            a.validate()?;
        }
        if let Some(v) = &self.volvol {
            v.validate()?;
        }
        if matches!(self.maker, MakerSpec::Akf | MakerSpec::RobustAkf) && self.horizon < MIN_OBSERVATIONS {
            return Err(validation(format!("adaptive makers need horizon >= {MIN_OBSERVATIONS}")));
        }
        let (s, e) = self.akf.initial;
        if !(s >= 0.0 && e >= 0.0 && s + e > 0.0) {
            return Err(validation("akf initial scales must be >= 0 and not both zero"));
        }
        self.adaptive_config(Estimation::Em).validate()
    }

    /// Settings for the online filter of an adaptive maker.
    pub fn adaptive_config(&self, estimation: Estimation) -> AdaptiveConfig {
        AdaptiveConfig {
            estimation,
            window: self.akf.window,
            refit_every: self.akf.refit_every,
            first_refit: self.akf.first_refit,
            em: self.em,
            robust: self.robust.clone(),
        }
    }
}
