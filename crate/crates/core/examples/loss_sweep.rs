//! Sweep price volatility for three makers and write the table plus a
//! matplotlib script into `target/loss_sweep/`.
//!
//! `cargo run --release --example loss_sweep`

use std::path::Path;

use adaptive_amm::error::Result;
use adaptive_amm::experiment::{emit_plots, run_sweep, Axis, MakerSpec, ScenarioConfig, SweepSpec};

fn main() -> Result<()> {
    let base = ScenarioConfig {
        horizon: 20_000,
        seeds: (1..=5).collect(),
        ..ScenarioConfig::default()
    };
    let spec = SweepSpec {
        base,
        axis: Axis::Sigma,
        values: vec![0.1, 0.5, 1.0],
        makers: vec![MakerSpec::Kf, MakerSpec::Akf, MakerSpec::StaticCpmm],
    };
    let result = run_sweep(&spec)?;
    println!("sigma  maker         mean % loss        se");
    for r in &result.rows {
        println!("{:<6} {:<12} {:>12.6} {:>9.6}", r.axis_value, r.maker, r.mean_pct_loss, r.se);
    }
    let files = emit_plots(&result, Path::new("target/loss_sweep"), "sweep")?;
    println!("wrote {} and {}", files.table.display(), files.script.display());
    Ok(())
}
