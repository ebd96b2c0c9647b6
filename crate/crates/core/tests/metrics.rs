//! Loss accounting and estimate accuracy.

use adaptive_amm::curves::TradeRecord;
use adaptive_amm::metrics::{oracle_rmsd, reference_mse, trade_pnl, LossLedger, ReferenceKind, Weighting};
use proptest::prelude::*;

fn rec(t: usize, dx: f64, p_eff: f64) -> TradeRecord {
    TradeRecord {
        t,
        p_trad: p_eff,
        dx,
        dy: dx * p_eff,
        p_eff,
        p0_before: p_eff,
        p0_after: p_eff,
        partial: false,
    }
}

#[test]
fn selling_above_the_hidden_price_is_profit() {
    let (pnl, notional) = trade_pnl(&rec(0, 2.0, 11.0), 10.0);
    assert_eq!((pnl, notional), (2.0, 20.0));
    let (pnl, _) = trade_pnl(&rec(0, -2.0, 11.0), 10.0);
    assert_eq!(pnl, -2.0);
    assert_eq!(trade_pnl(&rec(0, 0.0, 11.0), 10.0), (0.0, 0.0));
}

#[test]
fn burn_in_and_null_trades_are_not_counted() {
    let mut l = LossLedger::new(2, true);
    l.record(&rec(0, 1.0, 12.0), 10.0);
    l.record(&rec(1, 1.0, 12.0), 10.0);
    l.record(&rec(2, 0.0, 10.0), 10.0);
    l.record(&rec(3, 1.0, 9.0), 10.0);
    let s = l.summary(Weighting::TradeCount);
    assert_eq!(s.n_trades, 1);
    assert!((s.mean_pct + 10.0).abs() < 1e-12);
    assert!((s.cumulative_pnl - 3.0).abs() < 1e-12);
    assert_eq!(l.rows().len(), 4);
    assert_eq!(l.trades, 4);
}

#[test]
fn csv_has_the_documented_columns() {
    let mut l = LossLedger::new(0, true);
    l.record(&rec(1, 0.5, 4.0), 5.0);
    let mut buf = Vec::new();
    l.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,p_ext,p_trad,p_eff,dx,dy,pnl,pct"));
    assert_eq!(lines.next(), Some("1,5.0,4.0,4.0,0.5,2.0,-0.5,-0.2"));
}

#[test]
fn rmsd_and_references() {
    assert_eq!(oracle_rmsd(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
    assert_eq!(oracle_rmsd(&[1.0], &[1.0, 2.0]).unwrap_err().kind(), "length_mismatch");
    assert_eq!(reference_mse(ReferenceKind::Kf, 1.0, 1.0, 1), 0.5);
    assert_eq!(reference_mse(ReferenceKind::Static, 1.0, 2.0, 5), 4.0);
}

proptest! {
    #[test]
    fn reversed_trade_flips_pnl(dx in -100.0f64..100.0, p_eff in 0.01f64..1e4, p_ext in 0.01f64..1e4) {
        let (a, na) = trade_pnl(&rec(0, dx, p_eff), p_ext);
        let (b, nb) = trade_pnl(&rec(0, -dx, p_eff), p_ext);
        prop_assert_eq!(a, -b);
        prop_assert_eq!(na, nb);
        // pnl is the numeraire received minus the hidden value of the asset sold
        prop_assert!((a - (dx * p_eff - dx * p_ext)).abs() <= 1e-9 * (dx * p_eff).abs().max(1.0));
    }

    #[test]
    fn sharded_ledgers_merge_to_the_whole(
        trades in proptest::collection::vec((-10.0f64..10.0, 1.0f64..100.0, 1.0f64..100.0), 1..200),
        cut1 in 0usize..200, cut2 in 0usize..200,
    ) {
        let n = trades.len();
        let (c1, c2) = (cut1.min(cut2).min(n), cut1.max(cut2).min(n));
        let mut whole = LossLedger::new(0, false);
        let mut shards = [LossLedger::new(0, false), LossLedger::new(0, false), LossLedger::new(0, false)];
        for (i, &(dx, pe, px)) in trades.iter().enumerate() {
            whole.record(&rec(i, dx, pe), px);
            let k = if i < c1 { 0 } else if i < c2 { 1 } else { 2 };
            shards[k].record(&rec(i, dx, pe), px);
        }
        // (a + b) + c and a + (b + c) agree with the single pass
        let mut left = shards[0].clone();
        left.merge(&shards[1]);
        left.merge(&shards[2]);
        let mut bc = shards[1].clone();
        bc.merge(&shards[2]);
        let mut right = shards[0].clone();
        right.merge(&bc);
        let w = whole.summary(Weighting::TradeCount);
        for m in [left, right] {
            let s = m.summary(Weighting::TradeCount);
            prop_assert_eq!(s.n_trades, w.n_trades);
            prop_assert!((s.mean_pct - w.mean_pct).abs() <= 1e-9 * w.mean_pct.abs().max(1.0));
            prop_assert!((s.se_pct - w.se_pct).abs() <= 1e-9 * w.se_pct.abs().max(1.0));
            let (a, b) = (m.summary(Weighting::Notional).mean_pct, whole.summary(Weighting::Notional).mean_pct);
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}
