//! Simulation lab for adaptive AMM bonding curves.
//!
//! A hidden price follows a random walk and traders reveal noisy versions of
//! it by trading against a curve. Makers range from static constant-product
//! curves to Kalman-filter makers that re-fit the noise scales online and
//! publish the curve whose fills sit at the posterior mean.
//!
//! Layout: [`market`] draws paths, [`curves`] executes trades, [`optimal`]
//! turns beliefs into curves and back, [`filters`] estimates the price,
//! [`metrics`] keeps the books and [`experiment`] wires it into scenarios,
//! sweeps and checks.

// Negated float comparisons are deliberate throughout: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod market;
pub mod metrics;
pub mod ode;
pub mod optimal;
pub mod quad;
