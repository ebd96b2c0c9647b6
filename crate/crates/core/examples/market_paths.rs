//! Simulate hidden and trader price paths, with and without adversaries.
//!
//! `cargo run --example market_paths`

use adaptive_amm::error::Result;
use adaptive_amm::market::{stream_rng, AdversaryParams, Direction, Market, MarketParams};
use adaptive_amm::metrics::RunningStats;

fn main() -> Result<()> {
    let params = MarketParams::additive(0.5, 0.5)?;
    let mut m = Market::new(params, 100.0, None, None, stream_rng(7, 0))?;
    println!("   t       p_ext      p_trad");
    for _ in 0..5 {
        let s = m.next_step()?;
        println!("{:>4} {:>11.4} {:>11.4}", s.t, s.p_ext, s.p_trad);
    }

    // lognormal dynamics: the noise is multiplicative
    let params = MarketParams::lognormal(0.01, 0.02)?;
    let mut m = Market::new(params, 100.0, None, None, stream_rng(7, 0))?;
    let mut log_err = RunningStats::default();
    for _ in 0..10_000 {
        let s = m.next_step()?;
        log_err.push((s.p_trad / s.p_ext).ln());
    }
    println!(
        "lognormal: log(p_trad/p_ext) mean {:+.5}, std {:.5} (eta = 0.02)",
        log_err.mean,
        log_err.variance().sqrt()
    );

    // a third of the traders push the price 5-7 eta upward
    let params = MarketParams::additive(0.1, 0.2)?;
    let adv = AdversaryParams::new(0.3, Direction::Up)?;
    let mut m = Market::new(params, 100.0, Some(adv), None, stream_rng(7, 0))?;
    let (mut honest, mut bad) = (RunningStats::default(), RunningStats::default());
    for _ in 0..10_000 {
        let s = m.next_step()?;
        let d = (s.p_trad - s.p_ext) / s.eta;
        if s.adversarial {
            bad.push(d);
        } else {
            honest.push(d);
        }
    }
    println!(
        "adversarial share {:.3}; displacement in eta units: honest {:+.3}, adversarial {:+.3}",
        bad.n as f64 / (bad.n + honest.n) as f64,
        honest.mean,
        bad.mean
    );
    Ok(())
}
