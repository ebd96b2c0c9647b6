//! One scenario: a market path traded against one maker, per seed.

use std::io::Write;

use serde::Serialize;

use crate::curves::execute_trade;
use crate::error::{Error, Result};
use crate::market::{stream_rng, Market};
use crate::metrics::{LossLedger, LossSummary, RunningStats, Weighting};

use super::config::{MakerSpec, ScenarioConfig};
use super::maker::Maker;

/// RNG stream of the market path; every maker sees the same path per seed.
pub const MARKET_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub p_trad: f64,
    pub kf_mean: f64,
    pub kf_var: f64,
    pub gain: f64,
    pub sigma_hat: Option<f64>,
    pub eta_hat: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub ledger: LossLedger,
    /// RMSD of the maker's estimate against the hidden price after burn-in.
    pub rmsd: f64,
    pub trace: Vec<TraceRow>,
    /// Estimation weights split by trader type, for auditing robust makers.
    pub honest_weight: RunningStats,
    pub adversarial_weight: RunningStats,
}

impl SeedOutcome {
    pub fn summary(&self) -> LossSummary {
        self.ledger.summary(Weighting::TradeCount)
    }
}

/// What to retain per seed beyond the summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Keep {
    pub rows: bool,
    pub trace: bool,
}

/// Run `maker` on the path of `seed`. Paths whose hidden or trader price
/// goes non-positive fail with [`Error::NonPositivePrice`].
pub fn run_seed(cfg: &ScenarioConfig, maker: MakerSpec, seed: u64, keep: Keep) -> Result<SeedOutcome> {
    cfg.validate()?;
    let mut market = Market::new(cfg.market, cfg.p_init, cfg.adversary, cfg.volvol, stream_rng(seed, MARKET_STREAM))?;
    let mut mm = Maker::new(cfg, maker)?;
    let mut ledger = LossLedger::new(cfg.burn_in, keep.rows);
    let mut trace = Vec::new();
    let mut sq = RunningStats::default();
    let (mut honest_weight, mut adversarial_weight) = (RunningStats::default(), RunningStats::default());
    for _ in 0..cfg.horizon {
        let step = market.next_step()?;
        if !(step.p_ext > 0.0 && step.p_trad > 0.0) {
            return Err(Error::NonPositivePrice { t: step.t });
        }
        mm.set_true_params(step.sigma, step.eta);
        let quote = mm.quote()?;
        let (after, mut rec) = execute_trade(&quote.kind, &quote.state, step.p_trad)?;
        rec.t = step.t;
        ledger.record(&rec, step.p_ext);
        mm.settle(after, &rec)?;
        let est = mm.estimate(&rec);
        if step.t >= cfg.burn_in {
            sq.push((est - step.p_ext).powi(2));
        }
        let f = mm.filter();
        let weight = f.map_or(1.0, |f| f.last_weight());
        if f.is_some() {
            if step.adversarial {
                adversarial_weight.push(weight);
            } else {
                honest_weight.push(weight);
            }
        }
        if keep.trace {
            let adaptive = matches!(maker, MakerSpec::Akf | MakerSpec::RobustAkf);
            trace.push(match f {
                Some(f) => {
                    let s = f.state();
                    let (sh, eh) = f.params();
                    TraceRow {
                        t: step.t,
                        p_trad: step.p_trad,
                        kf_mean: s.mean,
                        kf_var: s.variance,
                        gain: s.gain,
                        sigma_hat: adaptive.then_some(sh),
                        eta_hat: adaptive.then_some(eh),
                        weight,
                    }
                }
                None => TraceRow {
                    t: step.t,
                    p_trad: step.p_trad,
                    kf_mean: rec.p0_after,
                    kf_var: 0.0,
                    gain: 1.0,
                    sigma_hat: None,
                    eta_hat: None,
                    weight,
                },
            });
        }
    }
    Ok(SeedOutcome {
        seed,
        ledger,
        rmsd: if sq.n > 0 { sq.mean.sqrt() } else { 0.0 },
        trace,
        honest_weight,
        adversarial_weight,
    })
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub per_seed: Vec<SeedOutcome>,
    /// Seeds whose price path went non-positive; they are excluded, not truncated.
    pub rejected: Vec<u64>,
    pub ledger: LossLedger,
}

/// Run the configured maker on every configured seed.
pub fn run_scenario(cfg: &ScenarioConfig, keep: Keep) -> Result<ScenarioOutcome> {
    use rayon::prelude::*;
    cfg.validate()?;
    let results: Vec<(u64, Result<SeedOutcome>)> = cfg
        .seeds
        .par_iter()
        .map(|&s| (s, run_seed(cfg, cfg.maker, s, keep)))
        .collect();
    let mut per_seed = Vec::new();
    let mut rejected = Vec::new();
    let mut ledger = LossLedger::new(cfg.burn_in, keep.rows);
    for (seed, r) in results {
        match r {
            Ok(o) => {
                ledger.merge(&o.ledger);
                per_seed.push(o);
            }
            Err(Error::NonPositivePrice { .. }) => rejected.push(seed),
            Err(e) => return Err(e),
        }
    }
    Ok(ScenarioOutcome {
        per_seed,
        rejected,
        ledger,
    })
}

/// CSV with columns t, p_trad, kf_mean, kf_var, gain, sigma_hat, eta_hat, weight.
pub fn write_trace_csv<W: Write>(w: W, rows: &[TraceRow]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    if rows.is_empty() {
        wtr.write_record(["t", "p_trad", "kf_mean", "kf_var", "gain", "sigma_hat", "eta_hat", "weight"])?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
