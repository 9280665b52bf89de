//! Replay one signal series through both decision rules and compare
//! transaction counts and fee-adjusted revenue.
//!
//! Run with: cargo run --example backtest_strategies

use barlab::strategy::{
    apply_fees, count_transactions, run_simple, run_threshold, SignalSeries, ThresholdConfig,
};
use barlab::synth::synthetic_bars;

fn main() -> barlab::Result<()> {
    let bars = synthetic_bars(31, 120);
    // a simple momentum rule stands in for model predictions here
    let signals: Vec<u8> = bars.iter().map(|b| u8::from(b.change_rate > 0.0)).collect();
    let series = SignalSeries::new(bars.iter().map(|b| b.trade_date).collect(), signals)?;

    let simple = run_simple(&series, &bars)?;
    let threshold = run_threshold(&series, &bars, &ThresholdConfig::default())?;

    let (fee, notional) = (10.0, 1000.0);
    for (name, log) in [("simple", &simple), ("threshold", &threshold)] {
        let after = apply_fees(log, fee, notional);
        let (buys, sells, total) = count_transactions(&after);
        println!(
            "{name:>9}: {buys} buys, {sells} sells, {total} total;  gross {:+.4}%  net {:+.4}%",
            after.gross_revenue, after.net_revenue
        );
    }

    println!("\nfirst days of the simple replay:");
    for line in simple.to_plot_csv().lines().take(8) {
        println!("  {line}");
    }
    println!("\nsummary json:\n{}", threshold.summary_json()?);
    Ok(())
}
