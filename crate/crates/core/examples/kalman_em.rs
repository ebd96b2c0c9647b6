//! Filter, smooth and estimate (sigma, eta) from a simulated trader-price series.
//!
//! `cargo run --example kalman_em`

use adaptive_amm::error::Result;
use adaptive_amm::filters::{rts_smooth, run_em, run_filter, EmConfig, Prior};
use adaptive_amm::market::{stream_rng, Market, MarketParams};

fn main() -> Result<()> {
    let (sigma, eta) = (0.1, 0.2);
    let mut m = Market::new(MarketParams::additive(sigma, eta)?, 100.0, None, None, stream_rng(3, 0))?;
    let steps: Vec<_> = (0..10_000).map(|_| m.next_step()).collect::<Result<_>>()?;
    let obs: Vec<f64> = steps.iter().map(|s| s.p_trad).collect();
    let truth: Vec<f64> = steps.iter().map(|s| s.p_ext).collect();

    let prior = Prior {
        mean: obs[0],
        variance: eta * eta,
    };
    let run = run_filter(&obs, sigma * sigma, &vec![eta * eta; obs.len()], prior)?;
    let smooth = rts_smooth(&run);
    let mse = |est: &[f64]| est.iter().zip(&truth).map(|(e, p)| (e - p).powi(2)).sum::<f64>() / truth.len() as f64;
    let filtered: Vec<f64> = run.states.iter().map(|s| s.mean).collect();
    println!("raw trader price MSE {:.5}", mse(&obs));
    println!("filtered MSE         {:.5} (steady-state variance {:.5})", mse(&filtered), run.states.last().unwrap().variance);
    println!("smoothed MSE         {:.5}", mse(&smooth.means));

    let fit = run_em(&obs, Some((1.0, 1.0)), &EmConfig::default())?;
    println!(
        "EM from (1, 1): sigma {:.4}, eta {:.4} after {} iterations (truth {sigma}, {eta})",
        fit.sigma_hat, fit.eta_hat, fit.iterations
    );
    let rises = fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    println!("log-likelihood {:.2} -> {:.2}, non-decreasing: {rises}", fit.trace[0], fit.loglik);
    Ok(())
}
