//! One full evaluation of (bars, window, model, strategy): build the
//! dataset, train, predict signals over the window and replay the strategy.

use std::time::Instant;

use crate::data::{build_dataset, Bar, SplitMode};
use crate::error::Result;
use crate::models::{predict_signal, train, ModelKind, TrainConfig, TrainedModel};
use crate::report::accuracy;
use crate::strategy::{
    apply_fees, run_simple, run_threshold, SignalSeries, StrategyKind, ThresholdConfig, TradeLog,
};

/// Everything needed to evaluate one run besides the bars themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestSettings {
    pub split_fraction: f64,
    pub split_mode: SplitMode,
    pub strategy: StrategyKind,
    pub thresholds: ThresholdConfig,
    pub fee: f64,
    pub notional: f64,
    pub train: TrainConfig,
}

impl Default for BacktestSettings {
    fn default() -> Self {
        Self {
            split_fraction: 0.8,
            split_mode: SplitMode::Chronological,
            strategy: StrategyKind::Simple,
            thresholds: ThresholdConfig::default(),
            fee: 0.0,
            notional: 1000.0,
            train: TrainConfig::default(),
        }
    }
}

/// Outcome of one backtest run.
#[derive(Debug, Clone)]
pub struct BacktestRun {
    pub model: TrainedModel,
    pub log: TradeLog,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Wall time of fit, prediction and replay.
    pub elapsed_seconds: f64,
}

/// Train on the window's training rows, predict a signal for every window
/// day in date order and replay the configured strategy with fees applied.
pub fn run_backtest(
    bars: &[Bar],
    window: usize,
    kind: ModelKind,
    settings: &BacktestSettings,
) -> Result<BacktestRun> {
    let started = Instant::now();
    let dataset = build_dataset(bars, window, settings.split_fraction, settings.split_mode)?;
    let model = train(kind, &dataset, &settings.train)?;

    let predictions: Vec<u8> = (0..dataset.rows())
        .map(|i| {
            let row = dataset.features.row(i);
            predict_signal(&model, row.as_slice().expect("contiguous row"))
        })
        .collect::<Result<_>>()?;
    let train_accuracy = accuracy(dataset.train_labels(), &predictions[..dataset.split_index])?;
    let test_accuracy = accuracy(dataset.test_labels(), &predictions[dataset.split_index..])?;

    // replay chronologically over the trailing window regardless of split mode
    let tail = &bars[bars.len() - window..];
    let signals: Vec<u8> = tail
        .iter()
        .map(|bar| predict_signal(&model, &dataset.standardize_bar(bar)))
        .collect::<Result<_>>()?;
    let series = SignalSeries::new(tail.iter().map(|b| b.trade_date).collect(), signals)?;
    let log = match settings.strategy {
        StrategyKind::Simple => run_simple(&series, tail)?,
        StrategyKind::Threshold => run_threshold(&series, tail, &settings.thresholds)?,
    };
    let log = apply_fees(&log, settings.fee, settings.notional);

    Ok(BacktestRun {
        model,
        log,
        train_accuracy,
        test_accuracy,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
