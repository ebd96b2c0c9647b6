//! Kalman filter, smoother, EM and robust EM.

use adaptive_amm::filters::kalman::block_variance_recursion;
use adaptive_amm::filters::{
    em_e_step, em_m_step, kf_block_mse, kf_step, robust_weight, rts_smooth, run_em, run_filter, run_robust_em,
    truncate_window, AdaptiveConfig, AdaptiveKalman, EmConfig, Estimation, KalmanState, Prior, Window,
};
use adaptive_amm::market::{stream_rng, AdversaryParams, Direction, Market, MarketParams};
use proptest::prelude::*;

fn series(sigma: f64, eta: f64, n: usize, seed: u64, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let adv = (alpha > 0.0).then(|| AdversaryParams::new(alpha, Direction::Up).unwrap());
    let mut m = Market::new(MarketParams::additive(sigma, eta).unwrap(), 0.0, adv, None, stream_rng(seed, 0)).unwrap();
    let steps: Vec<_> = (0..n).map(|_| m.next_step().unwrap()).collect();
    (steps.iter().map(|s| s.p_trad).collect(), steps.iter().map(|s| s.p_ext).collect())
}

/// Posterior of a random walk given noisy observations, by dense linear
/// algebra on the joint Gaussian: precision = Sigma_x^-1 + I / eta^2.
fn dense_posterior(obs: &[f64], sigma: f64, eta: f64, prior: Prior) -> (Vec<f64>, Vec<f64>) {
    let n = obs.len();
    // x_t = x_0 + sum of t shocks, x_0 ~ prior: Cov(x_i, x_j) = P0 + min(i, j) sigma^2 (1-based)
    let cov: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| prior.variance + (i.min(j) + 1) as f64 * sigma * sigma).collect())
        .collect();
    let mut prec = invert(&cov);
    for (i, row) in prec.iter_mut().enumerate() {
        row[i] += 1.0 / (eta * eta);
    }
    let post = invert(&prec);
    // precision-weighted information: Sigma_x^-1 (prior mean) + y / eta^2
    let prior_info: Vec<f64> = {
        let inv = invert(&cov);
        (0..n).map(|i| inv[i].iter().sum::<f64>() * prior.mean).collect()
    };
    let info: Vec<f64> = (0..n).map(|i| prior_info[i] + obs[i] / (eta * eta)).collect();
    let means = (0..n).map(|i| (0..n).map(|j| post[i][j] * info[j]).sum()).collect();
    let vars = (0..n).map(|i| post[i][i]).collect();
    (means, vars)
}

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|x, y| m[*x][c].abs().total_cmp(&m[*y][c].abs())).unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot_row = m[c].clone();
                for (v, p) in m[r].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[test]
fn variance_recursion_matches_information_form() {
    let scales = [0.1, 0.3, 1.0, 2.0, 7.5];
    for &sigma in &scales {
        for &eta in &scales {
            for t in 1..=64u64 {
                let p = block_variance_recursion(sigma, eta, t);
                let inv = t as f64 / (eta * eta) + 1.0 / (sigma * sigma);
                assert!((1.0 / p - inv).abs() / inv < 1e-12, "sigma={sigma} eta={eta} T={t}");
            }
        }
    }
}

#[test]
fn block_mse_closed_form() {
    assert!((kf_block_mse(1.0, 1.0, 1) - 0.5).abs() < 1e-15);
    assert!((kf_block_mse(1.0, 1.0, 4) - 0.2).abs() < 1e-15);
    for (s, e, t) in [(0.5, 2.0, 3u64), (2.0, 0.3, 10)] {
        let expect = e * e * s * s / (t as f64 * s * s + e * e);
        assert!((kf_block_mse(s, e, t) - expect).abs() < 1e-14 * expect);
    }
}

#[test]
fn filter_and_smoother_match_dense_posterior() {
    let (obs, _) = series(0.7, 0.4, 8, 5, 0.0);
    let prior = Prior {
        mean: 0.3,
        variance: 0.9,
    };
    let run = run_filter(&obs, 0.49, &[0.16; 8], prior).unwrap();
    let sm = rts_smooth(&run);
    let (means, vars) = dense_posterior(&obs, 0.7, 0.4, prior);
    for i in 0..8 {
        assert!((sm.means[i] - means[i]).abs() < 1e-10, "mean {i}");
        assert!((sm.variances[i] - vars[i]).abs() < 1e-10, "var {i}");
    }
    // the last filtered state is the last smoothed state
    let (m_last, v_last) = dense_posterior(&obs, 0.7, 0.4, prior);
    assert!((run.states[7].mean - m_last[7]).abs() < 1e-10);
    assert!((run.states[7].variance - v_last[7]).abs() < 1e-10);
}

#[test]
fn em_likelihood_never_decreases() {
    for seed in 0..50u64 {
        let sigma = 0.05 + 0.02 * (seed % 7) as f64;
        let eta = 0.05 + 0.03 * (seed % 5) as f64;
        let (obs, _) = series(sigma, eta, 300, 100 + seed, 0.0);
        let fit = run_em(&obs, Some((1.0, 1.0)), &EmConfig::default()).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn em_recovers_parameters() {
    let (mut s, mut e) = (0.0, 0.0);
    for seed in 1..=20u64 {
        let (obs, _) = series(0.1, 0.2, 10_000, seed, 0.0);
        let fit = run_em(&obs, None, &EmConfig::default()).unwrap();
        s += fit.sigma_hat / 20.0;
        e += fit.eta_hat / 20.0;
    }
    assert!((s - 0.1).abs() < 0.01, "sigma {s}");
    assert!((e - 0.2).abs() < 0.02, "eta {e}");
}

#[test]
fn em_estimate_is_a_fixed_point() {
    let (obs, _) = series(0.3, 0.5, 2000, 9, 0.0);
    let cfg = EmConfig {
        tol: 1e-12,
        max_iter: 5000,
        ..EmConfig::default()
    };
    let fit = run_em(&obs, None, &cfg).unwrap();
    let (a, b) = em_e_step(&obs, fit.sigma_hat, fit.eta_hat).unwrap();
    let m = em_m_step(&a, &b).unwrap();
    assert!((m.sigma - fit.sigma_hat).abs() < 1e-4 * fit.sigma_hat);
    assert!((m.eta - fit.eta_hat).abs() < 1e-4 * fit.eta_hat);
}

#[test]
fn em_rejects_short_series() {
    assert_eq!(run_em(&[1.0, 2.0, 3.0], None, &EmConfig::default()).unwrap_err().kind(), "validation");
    let h: Vec<f64> = (1..=12).map(f64::from).collect();
    assert_eq!(truncate_window(&h, 5).unwrap_err().kind(), "validation");
    assert_eq!(truncate_window(&h, 10).unwrap()[0], 3.0);
}

#[test]
fn robust_weight_formula() {
    assert_eq!(robust_weight(0.5, 1.0), 1.0);
    assert_eq!(robust_weight(2.0, 1.0), 0.25);
    assert_eq!(robust_weight(0.0, 1.0), 10.0);
}

#[test]
fn robust_em_agrees_with_em_on_clean_data() {
    for seed in 1..=5u64 {
        let (obs, _) = series(0.1, 0.2, 5000, seed, 0.0);
        let plain = run_em(&obs, None, &EmConfig::default()).unwrap();
        let robust = run_robust_em(&obs, None, &EmConfig::default()).unwrap();
        assert!((robust.sigma_hat / plain.sigma_hat - 1.0).abs() < 0.05, "seed {seed}");
        assert!((robust.eta_hat / plain.eta_hat - 1.0).abs() < 0.05, "seed {seed}");
    }
}

#[test]
fn robust_em_resists_adversaries() {
    let (obs, _) = series(0.1, 0.2, 5000, 3, 0.3);
    let plain = run_em(&obs, None, &EmConfig::default()).unwrap();
    let robust = run_robust_em(&obs, None, &EmConfig::default()).unwrap();
    assert!((robust.eta_hat - 0.2).abs() < (plain.eta_hat - 0.2).abs());
    assert!((robust.eta_hat - 0.2).abs() < 0.04, "robust eta {}", robust.eta_hat);
    let w = robust.weights.expect("robust fit reports weights");
    assert_eq!(w.len(), obs.len());
}

#[test]
fn known_parameter_filter_matches_batch_filter() {
    let (obs, _) = series(0.4, 0.6, 500, 2, 0.0);
    let prior = Prior { mean: 0.0, variance: 1.0 };
    let cfg = AdaptiveConfig {
        estimation: Estimation::Known,
        ..AdaptiveConfig::default()
    };
    let mut online = AdaptiveKalman::new(cfg, prior, 0.4, 0.6).unwrap();
    let batch = run_filter(&obs, 0.16, &vec![0.36; obs.len()], prior).unwrap();
    for (y, s) in obs.iter().zip(&batch.states) {
        online.observe(*y).unwrap();
        assert!((online.state().mean - s.mean).abs() < 1e-12);
        assert!((online.state().variance - s.variance).abs() < 1e-12);
    }
}

#[test]
fn adaptive_filter_learns_parameters() {
    let (obs, _) = series(0.1, 0.2, 4000, 4, 0.0);
    let cfg = AdaptiveConfig {
        window: Window::Full,
        ..AdaptiveConfig::default()
    };
    let mut f = AdaptiveKalman::new(cfg, Prior { mean: obs[0], variance: 1.0 }, 1.0, 1.0).unwrap();
    for y in &obs {
        f.observe(*y).unwrap();
    }
    let (s, e) = f.params();
    assert!((s - 0.1).abs() < 0.02 && (e - 0.2).abs() < 0.02, "({s}, {e})");
    assert!(f.last_fit().is_some());
}

proptest! {
    #[test]
    fn gain_stays_in_unit_interval_and_settles_monotonically(
        sigma in 0.01f64..10.0, eta in 0.01f64..10.0, p0 in 0.0f64..100.0
    ) {
        let mut st = KalmanState::new(0.0, p0);
        let mut gains = Vec::new();
        for i in 0..60 {
            st = kf_step(&st, (i as f64).sin(), sigma, eta);
            prop_assert!(st.gain > 0.0 && st.gain < 1.0);
            gains.push(st.gain);
        }
        let up = gains.windows(2).all(|w| w[1] >= w[0] - 1e-15);
        let down = gains.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        prop_assert!(up || down);
    }

    #[test]
    fn smoothing_never_increases_variance(sigma in 0.05f64..3.0, eta in 0.05f64..3.0, seed in 0u64..1000) {
        let (obs, _) = series(sigma, eta, 40, seed, 0.0);
        let run = run_filter(&obs, sigma * sigma, &vec![eta * eta; 40], Prior { mean: 0.0, variance: 1.0 }).unwrap();
        let sm = rts_smooth(&run);
        for (f, s) in run.states.iter().zip(&sm.variances) {
            prop_assert!(*s <= f.variance * (1.0 + 1e-12));
        }
        prop_assert!((sm.variances[39] - run.states[39].variance).abs() <= 1e-12 * run.states[39].variance);
    }

    #[test]
    fn em_is_monotone_from_any_start(s0 in 0.01f64..5.0, e0 in 0.01f64..5.0, seed in 0u64..1000) {
        let (obs, _) = series(0.2, 0.3, 200, seed, 0.0);
        let fit = run_em(&obs, Some((s0, e0)), &EmConfig::default()).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        }
    }
}
