//! Rauch-Tung-Striebel smoother with lag-one covariances.

use super::kalman::FilterRun;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedPath {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Cov(x_t, x_{t-1} | all data); entry 0 pairs the first state with the prior state.
    pub lag_one_cov: Vec<f64>,
    /// Smoothed moments of the state before the first observation.
    pub initial_mean: f64,
    pub initial_variance: f64,
}

/// Backward pass over a filter run for the random-walk model.
pub fn rts_smooth(run: &FilterRun) -> SmoothedPath {
    let n = run.states.len();
    let mut means: Vec<f64> = run.states.iter().map(|s| s.mean).collect();
    let mut variances: Vec<f64> = run.states.iter().map(|s| s.variance).collect();
    let mut lag = vec![0.0; n];
    for t in (0..n.saturating_sub(1)).rev() {
        let m_pred = run.predicted[t + 1];
        let j = if m_pred > 0.0 { run.states[t].variance / m_pred } else { 0.0 };
        means[t] = run.states[t].mean + j * (means[t + 1] - run.states[t].mean);
        variances[t] = run.states[t].variance + j * j * (variances[t + 1] - m_pred);
        lag[t + 1] = j * variances[t + 1];
    }
    let m_pred = run.predicted[0];
    let j0 = if m_pred > 0.0 { run.prior.variance / m_pred } else { 0.0 };
    let initial_mean = run.prior.mean + j0 * (means[0] - run.prior.mean);
    let initial_variance = run.prior.variance + j0 * j0 * (variances[0] - m_pred);
    lag[0] = j0 * variances[0];
    SmoothedPath {
        means,
        variances,
        lag_one_cov: lag,
        initial_mean,
        initial_variance,
    }
}

#[cfg(test)]
mod tests {
    use super::super::kalman::{run_filter, Prior};
    use super::*;

    #[test]
    fn single_observation_is_unchanged() {
        let run = run_filter(&[3.0], 1.0, &[1.0], Prior { mean: 0.0, variance: 1.0 }).unwrap();
        let s = rts_smooth(&run);
        assert_eq!(s.means[0], run.states[0].mean);
        assert_eq!(s.variances[0], run.states[0].variance);
    }

    #[test]
    fn exact_observations_are_reproduced() {
        let y = [1.0, 1.5, 0.7, 2.0];
        let run = run_filter(&y, 0.3, &[0.0; 4], Prior { mean: 0.0, variance: 1.0 }).unwrap();
        let s = rts_smooth(&run);
        assert_eq!(s.means, y.to_vec());
    }

    /// Shumway-Stoffer lag-one recursion, run backwards from
    /// C_{n,n-1} = (1 - K_n) P_{n-1|n-1}.
    #[test]
    fn lag_one_matches_shumway_stoffer() {
        let y = [0.3, -0.2, 0.9, 1.4, 1.1, 0.6, 1.8];
        let (q, r) = (0.4, 0.25);
        let prior = Prior { mean: 0.0, variance: 0.5 };
        let run = run_filter(&y, q, &[r; 7], prior).unwrap();
        let s = rts_smooth(&run);
        let n = y.len();
        let filt_var = |t: usize| if t == 0 { prior.variance } else { run.states[t - 1].variance };
        // index shift: state k (1-based) is run.states[k-1]; k = 0 is the prior
        let j = |k: usize| filt_var(k) / run.predicted[k];
        let mut c = (1.0 - run.states[n - 1].gain) * filt_var(n - 1);
        assert!((c - s.lag_one_cov[n - 1]).abs() < 1e-14);
        for k in (1..n).rev() {
            c = filt_var(k) * j(k - 1) + j(k) * (c - filt_var(k)) * j(k - 1);
            assert!((c - s.lag_one_cov[k - 1]).abs() < 1e-13, "k={k}");
        }
    }
}
