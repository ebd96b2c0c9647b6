//! Monte Carlo checks of the closed-form results: block MSE of the filter
//! versus a static curve, and the small-volatility optimality of a static
//! constant-mean curve.

use std::io::Write;

use serde::Serialize;

use crate::curves::{execute_trade, CurveKind, CurveState};
use crate::error::{validation, Result};
use crate::filters::kalman::kf_update;
use crate::filters::KalmanState;
use crate::market::{normal, stream_rng};
use crate::optimal::{cmmm_implied_beta, cmmm_model_beta, implied_beta, linspace};
use crate::metrics::{reference_mse, LossLedger, ReferenceKind, RunningStats, Weighting};

/// RNG stream of the block experiment.
pub const BLOCK_STREAM: u64 = 1;
/// RNG stream of the static constant-mean experiment.
pub const CMMM_STREAM: u64 = 2;
/// Minimum number of blocks for a block-MSE check.
pub const MIN_BLOCKS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockReport {
    pub sigma: f64,
    pub eta: f64,
    pub trades: u64,
    pub blocks: u64,
    pub kf_mse: f64,
    pub kf_se: f64,
    pub kf_expected: f64,
    pub static_mse: f64,
    pub static_se: f64,
    pub static_expected: f64,
}

impl BlockReport {
    /// |empirical - expected| in standard errors, for the filter and the static curve.
    pub fn z_scores(&self) -> (f64, f64) {
        (
            (self.kf_mse - self.kf_expected) / self.kf_se,
            (self.static_mse - self.static_expected) / self.static_se,
        )
    }
}

/// Independent blocks: the hidden price jumps by N(0, sigma^2) from a known
/// level, then stays fixed while `trades` noisy traders arrive. The filter
/// sees the jump scale once per block; the static curve ends at the last
/// trader price.
pub fn verify_block_mse(sigma: f64, eta: f64, trades: u64, blocks: u64, seed: u64) -> Result<BlockReport> {
    if blocks < MIN_BLOCKS {
        return Err(validation(format!("need >= {MIN_BLOCKS} blocks, got {blocks}")));
    }
    if trades == 0 {
        return Err(validation("need >= 1 trade per block"));
    }
    if !(sigma > 0.0 && eta >= 0.0) {
        return Err(validation("need sigma > 0 and eta >= 0"));
    }
    let mut rng = stream_rng(seed, BLOCK_STREAM);
    let (mut kf, mut st) = (RunningStats::default(), RunningStats::default());
    let (s2, e2) = (sigma * sigma, eta * eta);
    for _ in 0..blocks {
        let p = sigma * normal(&mut rng);
        let mut state = KalmanState::new(0.0, 0.0);
        let mut last = 0.0;
        for i in 0..trades {
            let y = p + eta * normal(&mut rng);
            let q = if i == 0 { s2 } else { 0.0 };
            state = kf_update(&state, y, q, e2).0;
            last = y;
        }
        kf.push((state.mean - p).powi(2));
        st.push((last - p).powi(2));
    }
    Ok(BlockReport {
        sigma,
        eta,
        trades,
        blocks,
        kf_mse: kf.mean,
        kf_se: kf.se(),
        kf_expected: reference_mse(ReferenceKind::Kf, sigma, eta, trades),
        static_mse: st.mean,
        static_se: st.se(),
        static_expected: reference_mse(ReferenceKind::Static, sigma, eta, trades),
    })
}

pub fn write_block_csv<W: Write>(w: W, r: &BlockReport) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.serialize(r)?;
    wtr.flush()?;
    Ok(())
}

/// eta that makes a static constant-mean curve with weight theta optimal:
/// sigma * sqrt(1/theta - 1).
pub fn tied_eta(sigma: f64, theta: f64) -> f64 {
    sigma * (1.0 / theta - 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmmmLimitRow {
    pub sigma: f64,
    pub eta: f64,
    pub mean_pct_loss: f64,
    pub se: f64,
    pub n_trades: u64,
}

/// Static constant-mean curve under dynamics where the hidden log price
/// jumps from the last trader price and traders observe it with noise
/// `eta_factor * tied_eta(sigma, theta)`.
///
/// Every sigma reuses the same normal draws (scaled by sigma), so the rows
/// differ only through sigma.
pub fn verify_cmmm_limit(
    theta: f64,
    sigmas: &[f64],
    horizon: usize,
    seeds: &[u64],
    eta_factor: f64,
) -> Result<Vec<CmmmLimitRow>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(validation(format!("theta must be in (0,1), got {theta}")));
    }
    if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(validation("sigma grid must be non-empty and positive"));
    }
    if sigmas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(validation("sigma grid must be strictly decreasing"));
    }
    if horizon == 0 || seeds.is_empty() {
        return Err(validation("need horizon >= 1 and at least one seed"));
    }
    if !(eta_factor > 0.0) {
        return Err(validation("eta_factor must be > 0"));
    }
    let kind = CurveKind::Cmmm { theta };
    sigmas
        .iter()
        .map(|&sigma| {
            let eta = eta_factor * tied_eta(sigma, theta);
            let mut ledger = LossLedger::new(0, false);
            for &seed in seeds {
                let mut rng = stream_rng(seed, CMMM_STREAM);
                let mut state = CurveState::cmmm(theta, 1.0, 1.0)?;
                let mut log_trad = 0.0;
                for t in 1..=horizon {
                    let log_ext = log_trad + sigma * normal(&mut rng);
                    log_trad = log_ext + eta * normal(&mut rng);
                    let (next, mut rec) = execute_trade(&kind, &state, log_trad.exp())?;
                    rec.t = t;
                    ledger.record(&rec, log_ext.exp());
                    state = next;
                }
            }
            let s = ledger.summary(Weighting::TradeCount);
            Ok(CmmmLimitRow {
                sigma,
                eta,
                mean_pct_loss: s.mean_pct,
                se: s.se_pct,
                n_trades: s.n_trades,
            })
        })
        .collect()
}

pub fn write_cmmm_limit_csv<W: Write>(w: W, rows: &[CmmmLimitRow]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaGapRow {
    pub sigma: f64,
    /// Sup over the window of |closed-form CMMM beta - model beta|.
    pub sup_gap_closed_form: f64,
    /// Same, with the CMMM beta recovered from the curve by the inverse ODE.
    pub sup_gap_inverse_ode: f64,
}

/// Compare the beta implied by a constant-mean curve (closed form and
/// inverse ODE) with the model beta at `sigma`, on `points` prices spread
/// over [0.9 p0, 1.1 p0].
pub fn cmmm_beta_gap(theta: f64, sigma: f64, p0: f64, points: usize) -> Result<BetaGapRow> {
    if points < 2 {
        return Err(validation("need at least two grid points"));
    }
    let state = CurveState::cmmm(theta, p0, 1.0)?;
    let grid: Vec<f64> = linspace(0.9 * p0, 1.1 * p0, points)
        .into_iter()
        .filter(|p| *p != p0)
        .collect();
    let ib = implied_beta(&CurveKind::Cmmm { theta }, &state, &grid)?;
    let (mut closed, mut ode) = (0.0f64, 0.0f64);
    for (p, b) in grid.iter().zip(&ib.values) {
        let model = cmmm_model_beta(*p, p0, theta, sigma);
        closed = closed.max((cmmm_implied_beta(*p, p0, theta) - model).abs());
        ode = ode.max((b - model).abs());
    }
    Ok(BetaGapRow {
        sigma,
        sup_gap_closed_form: closed,
        sup_gap_inverse_ode: ode,
    })
}

pub fn write_beta_gap_csv<W: Write>(w: W, rows: &[BetaGapRow]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
