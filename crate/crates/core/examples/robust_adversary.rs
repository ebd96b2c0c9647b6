//! Adversarial traders: plain versus robust EM, and the robust adaptive
//! filter against the known-parameter filter in a full scenario.
//!
//! `cargo run --release --example robust_adversary`

use adaptive_amm::error::Result;
use adaptive_amm::experiment::{run_seed, Keep, MakerSpec, ScenarioConfig};
use adaptive_amm::filters::{run_em, run_robust_em, EmConfig};
use adaptive_amm::market::{stream_rng, AdversaryParams, Direction, Market, MarketParams};

fn main() -> Result<()> {
    let params = MarketParams::additive(0.1, 0.2)?;
    let adv = AdversaryParams::new(0.3, Direction::Up)?;
    let mut m = Market::new(params, 100.0, Some(adv), None, stream_rng(1, 0))?;
    let obs: Vec<f64> = (0..5000).map(|_| m.next_step().map(|s| s.p_trad)).collect::<Result<_>>()?;

    let cfg = EmConfig::default();
    let plain = run_em(&obs, None, &cfg)?;
    let robust = run_robust_em(&obs, None, &cfg)?;
    println!("truth           sigma 0.1000 eta 0.2000");
    println!("plain EM        sigma {:.4} eta {:.4}", plain.sigma_hat, plain.eta_hat);
    println!("robust EM       sigma {:.4} eta {:.4}", robust.sigma_hat, robust.eta_hat);

    let mut scen = ScenarioConfig {
        horizon: 10_000,
        p_init: 100.0,
        burn_in: 1000,
        market: params,
        adversary: Some(adv),
        ..ScenarioConfig::default()
    };
    scen.seeds = vec![1];
    println!("\nmaker        price RMSD   mean % loss");
    for maker in [MakerSpec::Kf, MakerSpec::RobustAkf, MakerSpec::StaticCpmm] {
        let o = run_seed(&scen, maker, 1, Keep::default())?;
        println!("{:<12} {:>10.4} {:>13.6}", maker.to_string(), o.rmsd, o.summary().mean_pct);
    }
    Ok(())
}
