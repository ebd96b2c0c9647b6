//! Sampled beta functions and demand curves for inspection and plotting.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::curves::{demand, CurveKind, CurveState};
use crate::error::{validation, Result};
use crate::optimal::{implied_beta, integrate_optimal_curve, write_samples_csv, BetaFunction, Side, START_OFFSET};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpSpec {
    pub p0: f64,
    pub x0: f64,
    /// Kalman gain of the Gaussian and lognormal beliefs.
    pub gain: f64,
    /// Weight of the constant-mean curve.
    pub theta: f64,
    /// Samples cover [p0 / span, p0 * span].
    pub span: f64,
    /// Samples per side of p0.
    pub points: usize,
}

impl Default for DumpSpec {
    fn default() -> Self {
        DumpSpec {
            p0: 1.0,
            x0: 1.0,
            gain: 0.5,
            theta: 0.5,
            span: 2.0,
            points: 100,
        }
    }
}

impl DumpSpec {
    fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.x0 > 0.0 && self.span > 1.0 && self.points >= 2) {
            return Err(validation("dump needs p0 > 0, x0 > 0, span > 1, points >= 2"));
        }
        if !(self.gain > 0.0 && self.gain < 1.0 && self.theta > 0.0 && self.theta < 1.0) {
            return Err(validation("dump needs gain and theta in (0,1)"));
        }
        Ok(())
    }

    /// Log-spaced grid over the span, excluding p0 itself.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let below = (0..n).map(|i| self.p0 / self.span.powf((n - i) as f64 / n as f64));
        let above = (1..=n).map(|i| self.p0 * self.span.powf(i as f64 / n as f64));
        below.chain(above).collect()
    }
}

/// Unit-constant gap |g - x0| of the optimal curves at `p`.
fn unit_gap(lognormal: bool, gain: f64, p0: f64, p: f64) -> f64 {
    let a = gain / (1.0 - gain);
    if lognormal {
        (1.0 - (p / p0).powf(gain - 1.0)).abs().powf(a)
    } else {
        (p - p0).abs().powf(a)
    }
}

/// Optimal curve sampled across the span, scaled so each side exactly
/// spends its budget at the edge of the span.
fn optimal_samples(beta: &BetaFunction, lognormal: bool, spec: &DumpSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let state = CurveState::new(spec.p0, spec.x0, spec.p0 * spec.x0)?;
    let gap = |p: f64| unit_gap(lognormal, spec.gain, spec.p0, p);
    let (lo, hi) = (spec.p0 / spec.span, spec.p0 * spec.span);
    let c_buy = state.x0 / gap(hi);
    let c_sell = (state.y0 / state.p0) / gap(lo);
    let below = integrate_optimal_curve(
        beta,
        &state,
        Side::Below,
        lo,
        c_sell * gap(spec.p0 * (1.0 - START_OFFSET)),
        spec.points,
    )?;
    let above = integrate_optimal_curve(
        beta,
        &state,
        Side::Above,
        hi,
        c_buy * gap(spec.p0 * (1.0 + START_OFFSET)),
        spec.points,
    )?;
    let p = below.p.into_iter().chain(above.p).collect();
    let g = below.g.into_iter().chain(above.g).collect();
    Ok((p, g))
}

/// Write `beta_<name>.csv` (p, beta_p) and `curve_<name>.csv` (p, g_p) for
/// the Gaussian and lognormal optimal curves (integrated from the ODE) and for the betas implied by CPMM and CMMM.
pub fn curves_dump(spec: &DumpSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, p: &[f64], beta: &[f64], g: &[f64]| -> Result<()> {
        let bp = out_dir.join(format!("beta_{name}.csv"));
        let cp = out_dir.join(format!("curve_{name}.csv"));
        write_samples_csv(BufWriter::new(File::create(&bp)?), ("p", "beta_p"), p, beta)?;
        write_samples_csv(BufWriter::new(File::create(&cp)?), ("p", "g_p"), p, g)?;
        files.push(bp);
        files.push(cp);
        Ok(())
    };

    for (name, lognormal, beta) in [
        ("gaussian", false, BetaFunction::gaussian(spec.p0, spec.gain)),
        ("lognormal", true, BetaFunction::lognormal(spec.p0, spec.gain)),
    ] {
        let (p, g) = optimal_samples(&beta, lognormal, spec)?;
        let b = p.iter().map(|x| beta.eval(*x)).collect::<Result<Vec<_>>>()?;
        emit(name, &p, &b, &g)?;
    }

    let grid = spec.grid();
    let cpmm_state = CurveState::cpmm(spec.p0, spec.x0)?;
    let cmmm_state = CurveState::cmmm(spec.theta, spec.p0, spec.x0)?;
    for (name, kind, state) in [
        ("cpmm", CurveKind::cpmm_through(&cpmm_state), cpmm_state),
        ("cmmm", CurveKind::Cmmm { theta: spec.theta }, cmmm_state),
    ] {
        let ib = implied_beta(&kind, &state, &grid)?;
        let g = grid.iter().map(|p| demand(&kind, &state, *p)).collect::<Result<Vec<_>>>()?;
        emit(name, &grid, &ib.values, &g)?;
    }
    Ok(files)
}
