//! From beliefs to curves and back: grid Bayes updates, beta functions,
//! integrating the optimality ODE, and recovering beta from a curve.
//!
//! `cargo run --example optimal_curve_ode`

use adaptive_amm::curves::{demand, CurveKind, CurveState, OptimalParams};
use adaptive_amm::error::Result;
use adaptive_amm::optimal::{
    bayes_update, beta_from_belief, cmmm_implied_beta, implied_beta, integrate_optimal_curve, solve_fixed_point,
    BetaFunction, GridBelief, NoiseModel, Side, START_OFFSET,
};

fn main() -> Result<()> {
    // a Gaussian prior updated by three trader prices stays Gaussian
    let noise = NoiseModel::gaussian(0.5)?;
    let mut belief = GridBelief::gaussian(10.0, 1.0, 2048)?;
    for y in [10.4, 10.1, 10.6] {
        belief = bayes_update(&belief, y, &noise)?;
    }
    println!("posterior mean {:.6}, variance {:.6}", belief.mean(), belief.variance());

    // beta of the current belief and its fixed point (the operating point)
    let beta = beta_from_belief(&belief, &noise);
    let fp = solve_fixed_point(&beta, 5.0, 15.0)?;
    println!("beta(11) = {:.6}; fixed point p0 = {:.6}", beta.eval(11.0)?, fp.p);

    // integrate the optimality ODE for an affine beta and compare with the closed form
    let gain = 0.4;
    let p0 = 1.0;
    let c = 2.0;
    let state = CurveState::new(p0, 1.0, 1.0)?;
    let beta = BetaFunction::gaussian(p0, gain);
    let a = gain / (1.0 - gain);
    let gap = c * (p0 * START_OFFSET).powf(a);
    let sampled = integrate_optimal_curve(&beta, &state, Side::Above, 1.3, gap, 6)?;
    let closed = CurveKind::OptimalGaussian(OptimalParams {
        gain,
        c,
        c_sell: c,
        x_tilde: state.x0,
    });
    println!("      p     ODE g(p)  closed form");
    for (p, g) in sampled.p.iter().zip(&sampled.g) {
        println!("{p:>7.4} {g:>12.9} {:>12.9}", demand(&closed, &state, *p)?);
    }

    // the beta hidden inside a constant-product and a constant-mean curve
    let grid = [0.5, 0.8, 1.25, 2.0];
    let cp = CurveState::cpmm(p0, 1.0)?;
    let ib = implied_beta(&CurveKind::cpmm_through(&cp), &cp, &grid)?;
    let theta = 0.3;
    let cm = CurveState::cmmm(theta, p0, 1.0)?;
    let ibm = implied_beta(&CurveKind::Cmmm { theta }, &cm, &grid)?;
    println!("      p  cpmm beta  sqrt(p0 p)  cmmm beta  closed form");
    for (i, p) in grid.iter().enumerate() {
        println!(
            "{p:>7.3} {:>10.6} {:>11.6} {:>10.6} {:>12.6}",
            ib.values[i],
            (p0 * p).sqrt(),
            ibm.values[i],
            cmmm_implied_beta(*p, p0, theta)
        );
    }
    Ok(())
}
