//! Demand curves of the built-in families and what one trade does to them.
//!
//! `cargo run --example bonding_curves`

use adaptive_amm::curves::{
    cmmm_theta, demand, execute_trade, gaussian_depth_constants, marginal_price, CurveKind, CurveState, OptimalParams,
};
use adaptive_amm::error::Result;

fn show(name: &str, kind: &CurveKind, state: &CurveState, p_trad: f64) -> Result<()> {
    let g: Vec<String> = [0.5, 0.9, 1.0, 1.1, 2.0]
        .iter()
        .map(|p| demand(kind, state, *p).map(|g| format!("{g:.4}")))
        .collect::<Result<_>>()?;
    let (after, rec) = execute_trade(kind, state, p_trad)?;
    println!(
        "{name:<18} g(0.5,0.9,1,1.1,2) = [{}]  trade to {p_trad}: dx {:+.4} dy {:+.4} p_eff {:.4} -> reserves ({:.4}, {:.4})",
        g.join(", "),
        rec.dx,
        rec.dy,
        rec.p_eff,
        after.x0,
        after.y0
    );
    Ok(())
}

fn main() -> Result<()> {
    let p_trad = 1.2;
    let state = CurveState::new(1.0, 1.0, 1.0)?;
    show("constant sum", &CurveKind::Csmm, &state, p_trad)?;

    let state = CurveState::cpmm(1.0, 1.0)?;
    show("constant product", &CurveKind::cpmm_through(&state), &state, p_trad)?;

    // the weight that puts the marginal price at an estimate of 1.05
    let theta = cmmm_theta(1.05, 1.0, 1.0)?;
    let state = CurveState::cmmm(theta, 1.05, 1.0)?;
    let kind = CurveKind::Cmmm { theta };
    println!("constant mean theta = {theta:.4}, marginal price {:.4}", marginal_price(&kind, &state)?);
    show("constant mean", &kind, &state, p_trad)?;

    // optimal curve for a belief with Kalman gain 0.3, exhausted 0.5 away from p0
    let gain = 0.3;
    let state = CurveState::new(1.0, 1.0, 1.0)?;
    let (c, c_sell) = gaussian_depth_constants(gain, &state, state.x0, 0.5);
    let opt = CurveKind::OptimalGaussian(OptimalParams {
        gain,
        c,
        c_sell,
        x_tilde: state.x0,
    });
    show("optimal gaussian", &opt, &state, p_trad)?;
    println!("  the optimal curve fills at (1-K) p0 + K p_trad = {:.4}", (1.0 - gain) + gain * p_trad);

    let mixed = CurveKind::Mixed {
        opt: Box::new(opt),
        exp: Box::new(CurveKind::cpmm_through(&state)),
        epsilon: 0.1,
    };
    show("mixed (eps 0.1)", &mixed, &state, p_trad)?;
    Ok(())
}
