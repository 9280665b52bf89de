//! Grid-search the training-window length by backtest revenue.
//!
//! Run with: cargo run --example window_sweep

use barlab::backtest::BacktestSettings;
use barlab::models::ModelKind;
use barlab::sweep::sweep_windows;
use barlab::synth::synthetic_bars;

fn main() -> barlab::Result<()> {
    let bars = synthetic_bars(3, 500);
    // scaled-down grid; the default grid spans 183..1647 days
    let windows = [60, 120, 180, 240, 300, 360, 420];
    let settings = BacktestSettings::default();
    let result = sweep_windows(&bars, &windows, ModelKind::Logistic, &settings)?;

    println!("window  revenue%");
    for entry in &result.per_window {
        match (entry.revenue, &entry.skipped_reason) {
            (Some(revenue), _) => println!("{:>6}  {:>10.4}", entry.window, revenue),
            (None, Some(reason)) => println!("{:>6}  skipped: {reason}", entry.window),
            (None, None) => unreachable!("an entry has either revenue or a reason"),
        }
    }
    println!(
        "\nbest window: {} days (revenue {:.4}%)",
        result.best_window, result.best_revenue
    );
    print!("{}", result.to_csv());
    Ok(())
}
