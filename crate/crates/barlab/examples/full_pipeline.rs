//! End to end: synthesize a ten-stock universe, backtest every model on
//! every stock, and aggregate the runs into the comparison table.
//!
//! Run with: cargo run --example full_pipeline

use barlab::backtest::{run_backtest, BacktestSettings};
use barlab::models::ModelKind;
use barlab::report::{aggregate, emit, ReportFormat, RunMetrics, TransactionCounts};
use barlab::strategy::count_transactions;
use barlab::synth::synthetic_universe;

fn main() -> barlab::Result<()> {
    let universe = synthetic_universe(42, 10, 260);
    let window = 180;
    let models = [ModelKind::Logistic, ModelKind::Svm, ModelKind::Mlp];

    for kind in models {
        let mut settings = BacktestSettings::default();
        settings.train.learning_rate = match kind {
            ModelKind::Mlp => 0.001,
            _ => 0.01,
        };
        settings.train.epochs = 30; // keep the demo quick
        settings.fee = 10.0;

        let mut runs = Vec::new();
        for (stock_id, bars) in &universe {
            let run = run_backtest(bars, window, kind, &settings)?;
            let (buys, sells, total) = count_transactions(&run.log);
            runs.push(RunMetrics {
                stock_id: stock_id.clone(),
                model_kind: kind,
                strategy_kind: settings.strategy,
                total_time: run.elapsed_seconds,
                total_revenue: run.log.net_revenue,
                train_accuracy: run.train_accuracy,
                test_accuracy: run.test_accuracy,
                counts: TransactionCounts { buys, sells, total },
            });
        }
        let table = aggregate(&runs)?;
        println!("== {kind} ==");
        print!("{}", emit(&table, ReportFormat::Csv)?);
        println!();
    }
    Ok(())
}
