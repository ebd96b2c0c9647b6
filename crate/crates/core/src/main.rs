//! `amm-lab`: command-line front end for scenarios, sweeps and checks.
//!
//! Errors go to stderr as one line, `error: kind=<kind> message="<text>"`,
//! with exit status 2.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adaptive_amm::error::Result;
use adaptive_amm::experiment::dump::{curves_dump, DumpSpec};
use adaptive_amm::experiment::scenario::write_trace_csv;
use adaptive_amm::experiment::verify::{
    cmmm_beta_gap, verify_block_mse, verify_cmmm_limit, write_beta_gap_csv, write_block_csv,
    write_cmmm_limit_csv,
};
use adaptive_amm::experiment::{
    emit_plots, run_scenario, run_sweep, Axis, Keep, MakerSpec, ScenarioConfig, SweepSpec,
};

#[derive(Parser)]
#[command(name = "amm-lab", version, about = "Adaptive AMM simulation lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write per-seed summaries.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the configured maker.
        #[arg(long)]
        maker: Option<MakerSpec>,
        /// Also write per-trade ledger and filter trace CSVs for every seed.
        #[arg(long)]
        rows: bool,
    },
    /// Sweep one parameter over a grid for several makers.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "kf,akf,static_cpmm")]
        maker: Vec<MakerSpec>,
    },
    /// Sweep the adversarial fraction, reporting loss and price RMSD.
    Adversary {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.45")]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "robust_akf,kf,static_cpmm")]
        maker: Vec<MakerSpec>,
    },
    /// Block MSE of the filter and of a static curve against the closed forms.
    #[command(name = "verify-thm4")]
    VerifyBlock {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Trades per block.
        #[arg(long, default_value_t = 1)]
        trades: u64,
        #[arg(long, default_value_t = 100_000)]
        blocks: u64,
    },
    /// Loss of a static constant-mean curve as volatility shrinks, and the
    /// gap between its implied beta and the model beta.
    #[command(name = "verify-thm5")]
    VerifyCmmm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Decreasing sigma grid.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.03,0.01,0.003,0.001")]
        values: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        /// Trader noise as a multiple of the tied value.
        #[arg(long, default_value_t = 1.0)]
        eta_factor: f64,
    },
    /// Sample beta functions and demand curves to CSV.
    CurvesDump {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        p0: f64,
        #[arg(long, default_value_t = 0.5)]
        gain: f64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Samples per side of p0.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
}

fn base_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn simulate(common: &Common, maker: Option<MakerSpec>, rows: bool) -> Result<()> {
    let mut cfg = base_config(common)?;
    if let Some(m) = maker {
        cfg.maker = m;
        cfg.validate()?;
    }
    let keep = Keep { rows, trace: rows };
    let outcome = run_scenario(&cfg, keep)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&common.out, "simulate_summary.csv")?);
    w.write_record(["seed", "maker", "mean_pct_loss", "se", "n_trades", "cumulative_pnl", "rmsd", "status"])?;
    for o in &outcome.per_seed {
        let s = o.summary();
        w.write_record([
            o.seed.to_string(),
            cfg.maker.to_string(),
            s.mean_pct.to_string(),
            s.se_pct.to_string(),
            s.n_trades.to_string(),
            s.cumulative_pnl.to_string(),
            o.rmsd.to_string(),
            "ok".to_string(),
        ])?;
        if rows {
            o.ledger.write_csv(create(&common.out, &format!("ledger_seed{}.csv", o.seed))?)?;
            write_trace_csv(create(&common.out, &format!("trace_seed{}.csv", o.seed))?, &o.trace)?;
        }
    }
    for seed in &outcome.rejected {
        let na = "NaN".to_string();
        w.write_record([
            seed.to_string(),
            cfg.maker.to_string(),
            na.clone(),
            na.clone(),
            "0".into(),
            na.clone(),
            na,
            "rejected_non_positive_price".into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(common: &Common, axis: Axis, values: Vec<f64>, makers: Vec<MakerSpec>, stem: &str) -> Result<()> {
    let spec = SweepSpec {
        base: base_config(common)?,
        axis,
        values,
        makers,
    };
    let result = run_sweep(&spec)?;
    emit_plots(&result, &common.out, stem)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { common, maker, rows } => simulate(&common, maker, rows),
        Cmd::Sweep {
            common,
            axis,
            values,
            maker,
        } => sweep(&common, axis, values, maker, "sweep"),
        Cmd::Adversary { common, values, maker } => sweep(&common, Axis::Alpha, values, maker, "adversary"),
        Cmd::VerifyBlock {
            common,
            sigma,
            eta,
            trades,
            blocks,
        } => {
            let r = verify_block_mse(sigma, eta, trades, blocks, common.seed.unwrap_or(1))?;
            let mut w = create(&common.out, "block_mse.csv")?;
            write_block_csv(&mut w, &r)?;
            w.flush()?;
            Ok(())
        }
        Cmd::VerifyCmmm {
            common,
            theta,
            values,
            horizon,
            eta_factor,
        } => {
            let seeds = match common.seed {
                Some(s) => vec![s],
                None => vec![1, 2, 3, 4],
            };
            let rows = verify_cmmm_limit(theta, &values, horizon, &seeds, eta_factor)?;
            let mut w = create(&common.out, "cmmm_limit.csv")?;
            write_cmmm_limit_csv(&mut w, &rows)?;
            w.flush()?;
            let gaps = values
                .iter()
                .map(|s| cmmm_beta_gap(theta, *s, 1.0, 201))
                .collect::<Result<Vec<_>>>()?;
            let mut w = create(&common.out, "cmmm_beta_gap.csv")?;
            write_beta_gap_csv(&mut w, &gaps)?;
            w.flush()?;
            Ok(())
        }
        Cmd::CurvesDump {
            common,
            p0,
            gain,
            theta,
            points,
        } => {
            let spec = DumpSpec {
                p0,
                gain,
                theta,
                points,
                ..DumpSpec::default()
            };
            curves_dump(&spec, &common.out).map(|_| ())
        }
    }
}

fn fail(kind: &str, msg: &str) -> ExitCode {
    let msg = msg.trim().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "; ");
    eprintln!("error: kind={kind} message=\"{msg}\"");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail("usage", first.trim_start_matches("error: "));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

