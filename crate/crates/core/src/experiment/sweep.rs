//! Parameter sweeps: every (axis value, maker, seed) is an independent run.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::market::{AdversaryParams, Direction, VolOfVolParams};
use crate::metrics::RunningStats;

use super::config::{MakerSpec, ScenarioConfig};
use super::scenario::{run_seed, Keep, SeedOutcome};

/// Lower bound on evolved scales when a sweep adds vol-of-vol to a config without it.
pub const DEFAULT_VOLVOL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Sigma,
    Eta,
    Alpha,
    SigmaMetavol,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Sigma => "sigma",
            Axis::Eta => "eta",
            Axis::Alpha => "alpha",
            Axis::SigmaMetavol => "sigma_metavol",
        }
    }

    /// Copy of `base` with this axis set to `v`.
    pub fn apply(&self, base: &ScenarioConfig, v: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        match self {
            Axis::Sigma => c.market.sigma = v,
            Axis::Eta => c.market.eta = v,
            Axis::Alpha => {
                let mut a = c.adversary.unwrap_or(AdversaryParams::new(0.0, Direction::Up)?);
                a.alpha = v;
                c.adversary = Some(a);
            }
            Axis::SigmaMetavol => {
                let mut vv = c.volvol.unwrap_or(VolOfVolParams {
                    sigma_metavol: 0.0,
                    floor: DEFAULT_VOLVOL_FLOOR,
                });
                vv.sigma_metavol = v;
                c.volvol = Some(vv);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(Axis::Sigma),
            "eta" => Ok(Axis::Eta),
            "alpha" => Ok(Axis::Alpha),
            "sigma_metavol" => Ok(Axis::SigmaMetavol),
            _ => Err(validation(format!(
                "unknown axis '{s}' (expected sigma, eta, alpha or sigma_metavol)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub makers: Vec<MakerSpec>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(validation("sweep values must be non-empty"));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(validation("sweep values must be strictly increasing"));
        }
        if self.makers.is_empty() {
            return Err(validation("sweep needs at least one maker"));
        }
        self.base.validate()
    }
}

/// Aggregate over seeds for one (axis value, maker).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub maker: String,
    /// Mean over seeds of the per-seed mean pct loss (percent; negative = maker loses).
    pub mean_pct_loss: f64,
    pub se: f64,
    pub n_trades: u64,
    pub rmsd: f64,
    pub rmsd_se: f64,
    /// Seeds dropped because the price path went non-positive.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRow {
    pub axis_value: f64,
    pub maker: String,
    pub seed: u64,
    pub mean_pct_loss: f64,
    pub se: f64,
    pub n_trades: u64,
    pub rmsd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
    pub seeds: Vec<SeedRow>,
}

fn seed_row(v: f64, maker: &str, o: &SeedOutcome) -> SeedRow {
    let s = o.summary();
    SeedRow {
        axis_value: v,
        maker: maker.to_string(),
        seed: o.seed,
        mean_pct_loss: s.mean_pct,
        se: s.se_pct,
        n_trades: s.n_trades,
        rmsd: o.rmsd,
    }
}

fn aggregate(v: f64, maker: &str, seeds: &[SeedRow], rejected: usize) -> SweepRow {
    let (mut loss, mut rmsd) = (RunningStats::default(), RunningStats::default());
    for s in seeds {
        loss.push(s.mean_pct_loss);
        rmsd.push(s.rmsd);
    }
    // a single seed has no spread across seeds; fall back to its per-trade error
    let se = if seeds.len() == 1 { seeds[0].se } else { loss.se() };
    SweepRow {
        axis_value: v,
        maker: maker.to_string(),
        mean_pct_loss: if seeds.is_empty() { f64::NAN } else { loss.mean },
        se,
        n_trades: seeds.iter().map(|s| s.n_trades).sum(),
        rmsd: if seeds.is_empty() { f64::NAN } else { rmsd.mean },
        rmsd_se: rmsd.se(),
        rejected,
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let axis = spec.axis;
    let configs = spec
        .values
        .iter()
        .map(|&v| axis.apply(&spec.base, v).map_err(|e| wrap(axis, v, e)))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (ci, v) in spec.values.iter().enumerate() {
        for m in &spec.makers {
            for &s in &spec.base.seeds {
                jobs.push((ci, *v, *m, s));
            }
        }
    }
    let outcomes: Vec<Result<Option<SeedRow>>> = jobs
        .par_iter()
        .map(|&(ci, v, m, s)| match run_seed(&configs[ci], m, s, Keep::default()) {
            Ok(o) => Ok(Some(seed_row(v, &m.to_string(), &o))),
            Err(Error::NonPositivePrice { .. }) => Ok(None),
            Err(e) => Err(wrap(axis, v, e)),
        })
        .collect();
    let mut seeds = Vec::new();
    let mut rows = Vec::new();
    let mut it = outcomes.into_iter();
    for v in &spec.values {
        for m in &spec.makers {
            let mut group = Vec::new();
            let mut rejected = 0;
            for _ in &spec.base.seeds {
                match it.next().expect("one outcome per job")? {
                    Some(r) => group.push(r),
                    None => rejected += 1,
                }
            }
            rows.push(aggregate(*v, &m.to_string(), &group, rejected));
            seeds.extend(group);
        }
    }
    let key = |a: f64, m: &str| (a, m.to_string());
    rows.sort_by(|a, b| key(a.axis_value, &a.maker).partial_cmp(&key(b.axis_value, &b.maker)).unwrap());
    seeds.sort_by(|a, b| {
        (a.axis_value, &a.maker, a.seed)
            .partial_cmp(&(b.axis_value, &b.maker, b.seed))
            .unwrap()
    });
    Ok(SweepResult { axis, rows, seeds })
}

fn wrap(axis: Axis, value: f64, e: Error) -> Error {
    Error::AtAxisValue {
        axis: axis.name(),
        value,
        source: Box::new(e),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Columns axis_value, maker, mean_pct_loss, se, n_trades; `with_rmsd`
/// appends rmsd, rmsd_se and rejected.
pub fn write_rows_csv<W: Write>(w: W, rows: &[SweepRow], with_rmsd: bool) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = vec!["axis_value", "maker", "mean_pct_loss", "se", "n_trades"];
    if with_rmsd {
        header.extend(["rmsd", "rmsd_se", "rejected"]);
    }
    wtr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.axis_value.to_string(),
            r.maker.clone(),
            r.mean_pct_loss.to_string(),
            r.se.to_string(),
            r.n_trades.to_string(),
        ];
        if with_rmsd {
            rec.extend([r.rmsd.to_string(), r.rmsd_se.to_string(), r.rejected.to_string()]);
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-seed rows: axis_value, maker, seed, mean_pct_loss, se, n_trades, rmsd.
pub fn write_seed_csv<W: Write>(w: W, rows: &[SeedRow]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["axis_value", "maker", "seed", "mean_pct_loss", "se", "n_trades", "rmsd"])?;
    for r in rows {
        wtr.write_record([
            r.axis_value.to_string(),
            r.maker.clone(),
            r.seed.to_string(),
            r.mean_pct_loss.to_string(),
            r.se.to_string(),
            r.n_trades.to_string(),
            r.rmsd.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
