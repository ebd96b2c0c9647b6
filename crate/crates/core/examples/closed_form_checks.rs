//! Monte Carlo against closed forms: block MSE of the filter, the
//! small-volatility limit of a static constant-mean curve, and the
//! variance recursion.
//!
//! `cargo run --release --example closed_form_checks`

use adaptive_amm::error::Result;
use adaptive_amm::experiment::verify::{cmmm_beta_gap, verify_block_mse, verify_cmmm_limit};
use adaptive_amm::filters::kalman::block_variance_recursion;

fn main() -> Result<()> {
    for trades in [1, 4] {
        let r = verify_block_mse(1.0, 1.0, trades, 100_000, 1)?;
        let (zk, zs) = r.z_scores();
        println!(
            "T={trades}: filter MSE {:.4} vs {:.4} (z {zk:+.2}); static MSE {:.4} vs {:.4} (z {zs:+.2})",
            r.kf_mse, r.kf_expected, r.static_mse, r.static_expected
        );
    }

    let (sigma, eta) = (0.7, 1.3);
    for t in [1u64, 8, 64] {
        let p = block_variance_recursion(sigma, eta, t);
        let closed = 1.0 / (t as f64 / (eta * eta) + 1.0 / (sigma * sigma));
        println!("variance after {t:>2} trades: recursion {p:.15} closed form {closed:.15}");
    }

    let sigmas = [0.1, 0.01, 0.001];
    for (label, factor) in [("tied eta", 1.0), ("eta doubled", 2.0)] {
        let rows = verify_cmmm_limit(0.5, &sigmas, 50_000, &[1, 2], factor)?;
        for r in rows {
            println!("{label:<12} sigma {:<6} mean % loss {:+.3e} (se {:.1e})", r.sigma, r.mean_pct_loss, r.se);
        }
    }
    for s in sigmas {
        let g = cmmm_beta_gap(0.5, s, 1.0, 201)?;
        println!("sigma {s:<6} sup |beta gap| {:.3e}", g.sup_gap_inverse_ode);
    }
    Ok(())
}
