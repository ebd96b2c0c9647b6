//! The `amm-lab` binary: subcommands, outputs and the error line.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amm-lab"))
}

fn tmpdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("amm-lab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    std::fs::write(
        &p,
        "horizon = 1500\nseeds = [1, 2]\nburn_in = 100\n[market]\nsigma = 0.5\neta = 0.5\n",
    )
    .unwrap();
    p
}

/// Exit status 2 and exactly one stderr line `error: kind=<kind> message="..."`.
fn assert_error_line(out: &Output, kind: &str) {
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    let prefix = format!("error: kind={kind} message=\"");
    assert!(lines[0].starts_with(&prefix) && lines[0].ends_with('"'), "{}", lines[0]);
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        assert!(bin().arg(flag).output().unwrap().status.success());
    }
    let out = bin().args(["sweep", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--config", "--seed", "--out", "--axis", "--values", "--maker"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_are_one_line() {
    assert_error_line(&bin().output().unwrap(), "usage");
    assert_error_line(&bin().args(["sweep", "--axis", "mu", "--values", "1"]).output().unwrap(), "usage");
    assert_error_line(&bin().args(["simulate", "--seed", "x"]).output().unwrap(), "usage");
}

#[test]
fn runtime_errors_carry_their_kind() {
    let d = tmpdir("errors");
    let out = bin()
        .args(["sweep", "--axis", "sigma", "--values", "0.5,0.1", "--out"])
        .arg(&d)
        .output()
        .unwrap();
    assert_error_line(&out, "validation");
    let out = bin().args(["simulate", "--config", "/no/such/file.toml"]).output().unwrap();
    assert_error_line(&out, "config");
    let bad = d.join("bad.toml");
    std::fs::write(&bad, "horizon = \"many\"\n").unwrap();
    assert_error_line(&bin().arg("simulate").arg("--config").arg(&bad).output().unwrap(), "config");
    let out = bin().args(["verify-thm4", "--blocks", "5", "--out"]).arg(&d).output().unwrap();
    assert_error_line(&out, "validation");
}

#[test]
fn simulate_writes_summary_and_rows() {
    let d = tmpdir("simulate");
    let cfg = small_config(&d);
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "4", "--maker", "akf", "--rows", "--out"])
        .arg(&d)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(d.join("simulate_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "seed,maker,mean_pct_loss,se,n_trades,cumulative_pnl,rmsd,status");
    assert!(lines[1].starts_with("4,akf,") && lines[1].ends_with(",ok"));
    assert_eq!(std::fs::read_to_string(d.join("ledger_seed4.csv")).unwrap().lines().count(), 1501);
    assert_eq!(std::fs::read_to_string(d.join("trace_seed4.csv")).unwrap().lines().count(), 1501);
}

#[test]
fn sweep_and_adversary_write_tables() {
    let d = tmpdir("sweep");
    let cfg = small_config(&d);
    let ok = |args: &[&str]| {
        let out = bin().args(args).arg("--config").arg(&cfg).arg("--out").arg(&d).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["sweep", "--axis", "eta", "--values", "0.2,0.4", "--maker", "kf,static_cmmm:0.4"]);
    ok(&["adversary", "--values", "0,0.3"]);
    let t = std::fs::read_to_string(d.join("sweep_eta.csv")).unwrap();
    assert_eq!(t.lines().count(), 5);
    assert!(t.contains("static_cmmm:0.4"));
    let a = std::fs::read_to_string(d.join("adversary_alpha.csv")).unwrap();
    assert_eq!(a.lines().count(), 7);
    assert!(d.join("plot_adversary_alpha.py").exists());
}

#[test]
fn checks_and_dump_write_csv() {
    let d = tmpdir("checks");
    let run = |args: &[&str]| {
        let out = bin().args(args).arg("--out").arg(&d).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["verify-thm4", "--blocks", "10000", "--trades", "2"]);
    run(&["verify-thm5", "--values", "0.1,0.01", "--horizon", "2000"]);
    run(&["curves-dump", "--gain", "0.3", "--points", "10"]);
    let b = std::fs::read_to_string(d.join("block_mse.csv")).unwrap();
    assert!(b.starts_with("sigma,eta,trades,blocks,kf_mse,kf_se,kf_expected,static_mse,static_se,static_expected\n"));
    assert_eq!(std::fs::read_to_string(d.join("cmmm_limit.csv")).unwrap().lines().count(), 3);
    assert_eq!(std::fs::read_to_string(d.join("cmmm_beta_gap.csv")).unwrap().lines().count(), 3);
    for f in ["beta_gaussian", "curve_gaussian", "beta_lognormal", "curve_lognormal", "beta_cpmm", "curve_cmmm"] {
        assert_eq!(std::fs::read_to_string(d.join(format!("{f}.csv"))).unwrap().lines().count(), 21, "{f}");
    }
}
