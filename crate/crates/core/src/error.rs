//! Error type shared by every module.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation
    /// (non-positive price for a lognormal path, p <= 0 for a demand curve, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration or arguments rejected before any work is done.
    #[error("validation error: {0}")]
    Validation(String),

    /// A trader price so far from the belief support that the posterior has no mass.
    #[error("trader price {p_trad} is outside the belief support")]
    OutOfSupport { p_trad: f64 },

    #[error("no fixed point of beta in [{lo}, {hi}]")]
    NoFixedPoint { lo: f64, hi: f64 },

    /// The optimality ODE coefficient beta(p) - p vanished away from p0.
    #[error("singular ODE at p = {p}")]
    Singular { p: f64 },

    /// Integrated demand curve increased somewhere, violating incentive compatibility.
    #[error("integrated demand curve is not monotone near p = {p}")]
    NotMonotone { p: f64 },

    #[error("ODE integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    #[error("trade to {p_trad} would leave negative reserves")]
    ReserveExhausted { p_trad: f64 },

    /// EM produced a non-finite likelihood; carries the last finite estimate.
    #[error("non-finite log-likelihood after {iterations} iterations (last sigma={sigma}, eta={eta})")]
    NonFinite {
        iterations: usize,
        sigma: f64,
        eta: f64,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("price path went non-positive at t = {t}")]
    NonPositivePrice { t: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    /// A sweep point failed; `kind()` reports the inner error's kind.
    #[error("at {axis}={value}: {source}")]
    AtAxisValue {
        axis: &'static str,
        value: f64,
        source: Box<Error>,
    },
}

impl Error {
    /// Stable short identifier, used for the CLI's one-line error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::OutOfSupport { .. } => "out_of_support",
            Error::NoFixedPoint { .. } => "no_fixed_point",
            Error::Singular { .. } => "singular",
            Error::NotMonotone { .. } => "not_monotone",
            Error::Integration { .. } => "integration",
            Error::ReserveExhausted { .. } => "reserve_exhausted",
            Error::NonFinite { .. } => "non_finite",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonPositivePrice { .. } => "non_positive_price",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Config(_) => "config",
            Error::AtAxisValue { source, .. } => source.kind(),
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
