//! Loss accounting against the hidden price, and price-estimate accuracy.

use std::io::Write;

use serde::Serialize;

use crate::curves::TradeRecord;
use crate::error::{Error, Result};

/// Maker profit of a trade measured at the hidden price: (p_eff - p_ext) dx,
/// with notional p_ext |dx|.
pub fn trade_pnl(rec: &TradeRecord, p_ext: f64) -> (f64, f64) {
    if rec.dx == 0.0 {
        return (0.0, 0.0);
    }
    ((rec.p_eff - p_ext) * rec.dx, p_ext * rec.dx.abs())
}

/// Streaming count, mean and sum of squared deviations; merges associatively.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &RunningStats) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    /// Sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: usize,
    pub p_ext: f64,
    pub p_trad: f64,
    pub p_eff: f64,
    pub dx: f64,
    pub dy: f64,
    pub pnl: f64,
    /// pnl / notional as a fraction; 0 for null trades.
    pub pct: f64,
}

/// How per-trade percentages are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Plain mean of pnl/notional over non-null trades.
    #[default]
    TradeCount,
    /// Sum of pnl over sum of notional.
    Notional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossSummary {
    /// Mean per-trade loss in percent (positive = maker profit).
    pub mean_pct: f64,
    pub se_pct: f64,
    /// Trades counted in the mean (after burn-in, non-null).
    pub n_trades: u64,
    pub cumulative_pnl: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossLedger {
    rows: Option<Vec<LedgerRow>>,
    pub cumulative_pnl: f64,
    /// All recorded trades, including null and burn-in trades.
    pub trades: u64,
    burn_in: usize,
    pct: RunningStats,
    counted_pnl: f64,
    counted_notional: f64,
}

impl LossLedger {
    /// Trades with `t < burn_in` are recorded but excluded from the summary.
    pub fn new(burn_in: usize, keep_rows: bool) -> Self {
        LossLedger {
            rows: keep_rows.then(Vec::new),
            burn_in,
            ..Default::default()
        }
    }

    pub fn record(&mut self, rec: &TradeRecord, p_ext: f64) -> LedgerRow {
        let (pnl, notional) = trade_pnl(rec, p_ext);
        let pct = if notional > 0.0 { pnl / notional } else { 0.0 };
        let row = LedgerRow {
            t: rec.t,
            p_ext,
            p_trad: rec.p_trad,
            p_eff: rec.p_eff,
            dx: rec.dx,
            dy: rec.dy,
            pnl,
            pct,
        };
        self.trades += 1;
        self.cumulative_pnl += pnl;
        if rec.t >= self.burn_in && notional > 0.0 {
            self.pct.push(pct);
            self.counted_pnl += pnl;
            self.counted_notional += notional;
        }
        if let Some(rows) = &mut self.rows {
            rows.push(row);
        }
        row
    }

    pub fn rows(&self) -> &[LedgerRow] {
        self.rows.as_deref().unwrap_or(&[])
    }

    pub fn pct_stats(&self) -> RunningStats {
        self.pct
    }

    pub fn summary(&self, weighting: Weighting) -> LossSummary {
        let mean = match weighting {
            Weighting::TradeCount => self.pct.mean,
            Weighting::Notional if self.counted_notional > 0.0 => self.counted_pnl / self.counted_notional,
            Weighting::Notional => 0.0,
        };
        LossSummary {
            mean_pct: 100.0 * mean,
            se_pct: 100.0 * self.pct.se(),
            n_trades: self.pct.n,
            cumulative_pnl: self.cumulative_pnl,
        }
    }

    pub fn merge(&mut self, other: &LossLedger) {
        self.cumulative_pnl += other.cumulative_pnl;
        self.trades += other.trades;
        self.pct.merge(&other.pct);
        self.counted_pnl += other.counted_pnl;
        self.counted_notional += other.counted_notional;
        if let (Some(a), Some(b)) = (&mut self.rows, &other.rows) {
            a.extend_from_slice(b);
        }
    }

    /// CSV with columns t, p_ext, p_trad, p_eff, dx, dy, pnl, pct.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        if self.rows().is_empty() {
            wtr.write_record(["t", "p_ext", "p_trad", "p_eff", "dx", "dy", "pnl", "pct"])?;
        }
        for r in self.rows() {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// sqrt(mean((estimate - hidden)^2)).
pub fn oracle_rmsd(estimates: &[f64], hidden: &[f64]) -> Result<f64> {
    if estimates.len() != hidden.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: hidden.len(),
        });
    }
    if estimates.is_empty() {
        return Err(crate::error::validation("rmsd needs at least one point"));
    }
    let ss: f64 = estimates.iter().zip(hidden).map(|(e, h)| (e - h) * (e - h)).sum();
    Ok((ss / estimates.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Kf,
    Static,
}

/// Closed-form block MSE of the filter or of a static curve.
pub fn reference_mse(kind: ReferenceKind, sigma: f64, eta: f64, trades: u64) -> f64 {
    match kind {
        ReferenceKind::Kf => crate::filters::kf_block_mse(sigma, eta, trades),
        ReferenceKind::Static => eta * eta,
    }
}
