//! Sweep tables as CSV plus a self-contained matplotlib script that plots
//! loss against the axis, one line per maker.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{validation, Result};

use super::sweep::{write_rows_csv, write_seed_csv, Axis, SweepResult};

/// Files written by [`emit_plots`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub table: PathBuf,
    pub seeds: PathBuf,
    pub script: PathBuf,
}

const SCRIPT: &str = r#"import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
series = defaultdict(list)
with open(os.path.join(here, "{table}")) as f:
    for row in csv.DictReader(f):
        series[row["maker"]].append(row)

panels = [("mean_pct_loss", "se", "mean % loss per trade")]
if {with_rmsd}:
    panels.insert(0, ("rmsd", "rmsd_se", "RMSD of price estimate"))
fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 4), squeeze=False)
for ax, (col, err, label) in zip(axes[0], panels):
    for maker, rows in sorted(series.items()):
        x = [float(r["axis_value"]) for r in rows]
        y = [float(r[col]) for r in rows]
        e = [float(r[err]) for r in rows]
        ax.errorbar(x, y, yerr=e, marker="o", capsize=3, label=maker)
    ax.set_xlabel("{axis}")
    ax.set_ylabel(label)
    ax.grid(alpha=0.3)
    ax.legend()
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{stem}_{axis}.png")
fig.savefig(out, dpi=150)
print(out)
"#;

/// Write `<stem>_<axis>.csv`, `<stem>_<axis>_seeds.csv` and
/// `plot_<stem>_<axis>.py` into `out_dir`. The alpha axis gets an RMSD panel
/// next to the loss panel.
pub fn emit_plots(result: &SweepResult, out_dir: &Path, stem: &str) -> Result<PlotFiles> {
    if result.rows.is_empty() {
        return Err(validation("cannot plot an empty results table"));
    }
    std::fs::create_dir_all(out_dir)?;
    let axis = result.axis.name();
    let with_rmsd = result.axis == Axis::Alpha;
    let table = out_dir.join(format!("{stem}_{axis}.csv"));
    let seeds = out_dir.join(format!("{stem}_{axis}_seeds.csv"));
    let script = out_dir.join(format!("plot_{stem}_{axis}.py"));
    write_rows_csv(BufWriter::new(File::create(&table)?), &result.rows, with_rmsd)?;
    write_seed_csv(BufWriter::new(File::create(&seeds)?), &result.seeds)?;
    let body = SCRIPT
        .replace("{table}", &format!("{stem}_{axis}.csv"))
        .replace("{with_rmsd}", if with_rmsd { "True" } else { "False" })
        .replace("{axis}", axis)
        .replace("{stem}", stem);
    std::fs::write(&script, body)?;
    Ok(PlotFiles { table, seeds, script })
}
