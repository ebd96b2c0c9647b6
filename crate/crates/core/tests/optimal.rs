//! Beliefs, beta functions and the optimality ODE in both directions.

use adaptive_amm::curves::{demand, CurveKind, CurveState, OptimalParams};
use adaptive_amm::optimal::{
    bayes_update, beta_from_belief, beta_from_log_belief, cmmm_implied_beta, implied_beta, integrate_optimal_curve,
    lognormal_operating_point, solve_fixed_point, BetaFunction, GridBelief, NoiseModel, Side, START_OFFSET,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Closed-form gap |g - x0| at the start offset, without the rounding of g itself.
fn start_gap(kind: &CurveKind, s: &CurveState, p: f64) -> f64 {
    match kind {
        CurveKind::OptimalGaussian(o) => {
            let c = if p > s.p0 { o.c } else { o.c_sell };
            c * (p - s.p0).abs().powf(o.gain / (1.0 - o.gain))
        }
        CurveKind::OptimalLognormal { params: o, kappa } => {
            let c = if p > s.p0 { o.c } else { o.c_sell };
            c * (1.0 - kappa * p.powf(o.gain - 1.0)).abs().powf(o.gain / (1.0 - o.gain))
        }
        _ => unreachable!("only optimal curves have a free start gap"),
    }
}

/// Max relative error of the ODE solution against the closed-form curve on both sides.
fn ode_error(kind: &CurveKind, beta: &BetaFunction, s: &CurveState, lo: f64, hi: f64) -> f64 {
    let mut worst = 0.0f64;
    for (side, end, start) in [
        (Side::Above, hi, s.p0 * (1.0 + START_OFFSET)),
        (Side::Below, lo, s.p0 * (1.0 - START_OFFSET)),
    ] {
        let c = integrate_optimal_curve(beta, s, side, end, start_gap(kind, s, start), 60).unwrap();
        for (p, g) in c.p.iter().zip(&c.g) {
            worst = worst.max(rel(*g, demand(kind, s, *p).unwrap()));
        }
    }
    worst
}

#[test]
fn ode_reproduces_gaussian_and_lognormal_curves() {
    let s = CurveState::new(2.0, 1.0, 2.0).unwrap();
    for gain in [0.2, 0.5, 0.8] {
        let a = gain / (1.0 - gain);
        // constants small enough that neither side runs dry on the window
        let c = 0.5 / 1.0f64.powf(a);
        let params = OptimalParams {
            gain,
            c,
            c_sell: c,
            x_tilde: s.x0,
        };
        let g = CurveKind::OptimalGaussian(params);
        let e = ode_error(&g, &BetaFunction::gaussian(s.p0, gain), &s, 1.2, 2.8);
        assert!(e < 1e-6, "gaussian K={gain}: {e:e}");

        let ln = CurveKind::optimal_lognormal(s.p0, OptimalParams { c: 0.4, c_sell: 0.4, ..params });
        let e = ode_error(&ln, &BetaFunction::lognormal(s.p0, gain), &s, 1.2, 3.0);
        assert!(e < 1e-6, "lognormal K={gain}: {e:e}");
    }
}

#[test]
fn implied_beta_of_cpmm_and_cmmm() {
    let p0 = 3.0;
    let grid = log_grid(p0 / 10.0, p0 * 10.0, 41);
    let s = CurveState::cpmm(p0, 2.0).unwrap();
    let ib = implied_beta(&CurveKind::cpmm_through(&s), &s, &grid).unwrap();
    for (p, b) in grid.iter().zip(&ib.values) {
        assert!(rel(*b, (p0 * p).sqrt()) < 1e-8, "cpmm p={p}: {b}");
    }
    let s = CurveState::cmmm(0.3, p0, 2.0).unwrap();
    let ib = implied_beta(&CurveKind::Cmmm { theta: 0.3 }, &s, &grid).unwrap();
    for (p, b) in grid.iter().zip(&ib.values) {
        assert!(rel(*b, cmmm_implied_beta(*p, p0, 0.3)) < 1e-8, "cmmm p={p}: {b}");
    }
}

#[test]
fn constant_sum_implies_constant_beta() {
    let s = CurveState::new(2.0, 1.0, 1.0).unwrap();
    let ib = implied_beta(&CurveKind::Csmm, &s, &[1.0, 3.0]).unwrap();
    assert!(ib.degenerate);
    assert_eq!(ib.values, vec![2.0, 2.0]);
}

#[test]
fn grid_update_matches_conjugate_closed_form() {
    let eta = 0.7;
    let noise = NoiseModel::gaussian(eta).unwrap();
    let (mut m, mut v) = (5.0, 4.0);
    let mut belief = GridBelief::gaussian(m, v, 4096).unwrap();
    let mut y = 5.3;
    for i in 0..100 {
        // deterministic, wandering observations
        y += 0.3 * ((i as f64) * 1.7).sin();
        belief = bayes_update(&belief, y, &noise).unwrap();
        let k = v / (v + eta * eta);
        m += k * (y - m);
        v *= 1.0 - k;
    }
    assert!((belief.mean() - m).abs() < 1e-4, "{} vs {m}", belief.mean());
    assert!((belief.variance() - v).abs() < 1e-4, "{} vs {v}", belief.variance());
}

#[test]
fn numeric_beta_matches_gaussian_closed_form() {
    let (mu, var, eta) = (10.0, 0.5, 0.8);
    let belief = GridBelief::gaussian(mu, var, 2048).unwrap();
    let noise = NoiseModel::gaussian(eta).unwrap();
    let numeric = beta_from_belief(&belief, &noise);
    let closed = BetaFunction::gaussian_from_prior(mu, var, eta);
    for p in [8.0, 9.5, 10.0, 11.2, 12.5] {
        assert!((numeric.eval(p).unwrap() - closed.eval(p).unwrap()).abs() < 1e-8);
        assert!((numeric.derivative(p).unwrap() - closed.derivative(p).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn log_belief_beta_matches_lognormal_posterior() {
    let (m, var, eta) = (0.2, 0.04, 0.1);
    let belief = GridBelief::gaussian(m, var, 2048).unwrap();
    let beta = beta_from_log_belief(&belief, &NoiseModel::gaussian(eta).unwrap());
    let k = var / (var + eta * eta);
    for p in [0.9f64, 1.2, 1.5] {
        // posterior of log price is Gaussian, so the price mean is exp(mean + var / 2)
        let expect = ((1.0 - k) * m + k * p.ln() + 0.5 * (1.0 - k) * var).exp();
        assert!(rel(beta.eval(p).unwrap(), expect) < 1e-8, "p={p}");
    }
}

#[test]
fn far_observation_is_out_of_support() {
    let belief = GridBelief::gaussian(0.0, 1.0, 256).unwrap();
    let e = bayes_update(&belief, 1e6, &NoiseModel::gaussian(0.01).unwrap()).unwrap_err();
    assert_eq!(e.kind(), "out_of_support");
}

#[test]
fn fixed_point_needs_a_bracket() {
    let belief = GridBelief::gaussian(10.0, 1.0, 1024).unwrap();
    let beta = beta_from_belief(&belief, &NoiseModel::gaussian(1.0).unwrap());
    assert_eq!(solve_fixed_point(&beta, 12.0, 15.0).unwrap_err().kind(), "no_fixed_point");
    assert_eq!(solve_fixed_point(&beta, 3.0, 1.0).unwrap_err().kind(), "validation");
}

proptest! {
    #[test]
    fn fixed_point_is_bracketed_and_fixed(mu in -50.0f64..50.0, var in 0.01f64..4.0, eta in 0.1f64..3.0,
                                          a in 0.5f64..5.0, b in 0.5f64..5.0) {
        let belief = GridBelief::gaussian(mu, var, 1024).unwrap();
        let beta = beta_from_belief(&belief, &NoiseModel::gaussian(eta).unwrap());
        let (lo, hi) = (mu - a, mu + b);
        let fp = solve_fixed_point(&beta, lo, hi).unwrap();
        prop_assert!(fp.p >= lo && fp.p <= hi);
        prop_assert!((beta.eval(fp.p).unwrap() - fp.p).abs() < 1e-8 * fp.p.abs().max(1.0));
        prop_assert!((fp.p - belief.mean()).abs() < 1e-6 * mu.abs().max(1.0));
    }

    #[test]
    fn lognormal_operating_point_is_predictive_mean(m in -5.0f64..5.0, big_m in 1e-6f64..2.0, eta in 0.01f64..2.0) {
        let k = big_m / (big_m + eta * eta);
        let p_post = (1.0 - k) * big_m;
        let p0 = lognormal_operating_point(m, p_post, k);
        prop_assert!(rel(p0, (m + 0.5 * big_m).exp()) < 1e-12);
    }

    #[test]
    fn gaussian_ode_tracks_closed_form(gain in 0.1f64..0.9, p0 in 0.5f64..50.0) {
        let s = CurveState::new(p0, 1.0, p0).unwrap();
        let c = 0.3 / (0.5 * p0).powf(gain / (1.0 - gain));
        let k = CurveKind::OptimalGaussian(OptimalParams { gain, c, c_sell: c, x_tilde: 1.0 });
        let e = ode_error(&k, &BetaFunction::gaussian(p0, gain), &s, 0.6 * p0, 1.5 * p0);
        prop_assert!(e < 1e-6, "{:e}", e);
    }

    #[test]
    fn implied_beta_round_trips_cpmm(p0 in 0.01f64..1e3, f in 0.1f64..10.0) {
        let s = CurveState::cpmm(p0, 1.0).unwrap();
        let ib = implied_beta(&CurveKind::cpmm_through(&s), &s, &[p0 * f]).unwrap();
        prop_assert!(rel(ib.values[0], p0 * f.sqrt()) < 1e-8);
    }
}
