//! Training-window grid search: evaluate every candidate window by backtest
//! revenue and keep the first maximum, starting from negative infinity.

use rayon::prelude::*;
use serde::Serialize;

use crate::backtest::{run_backtest, BacktestSettings};
use crate::data::Bar;
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Six-month multiples used as the default grid.
pub const DEFAULT_WINDOW_GRID: [usize; 9] = [183, 366, 549, 732, 915, 1098, 1281, 1464, 1647];

/// One grid entry: either a revenue or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowOutcome {
    pub window: usize,
    pub revenue: Option<f64>,
    pub skipped_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub per_window: Vec<WindowOutcome>,
    pub best_window: usize,
    pub best_revenue: f64,
}

impl SweepResult {
    /// Table-shaped CSV: window, revenue_percent, skipped_reason.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,revenue_percent,skipped_reason\n");
        for entry in &self.per_window {
            match (&entry.revenue, &entry.skipped_reason) {
                (Some(rev), _) => out.push_str(&format!("{},{rev},\n", entry.window)),
                (None, Some(reason)) => {
                    out.push_str(&format!("{},,{}\n", entry.window, reason.replace(',', ";")))
                }
                (None, None) => out.push_str(&format!("{},,\n", entry.window)),
            }
        }
        out
    }
}

/// First window attaining the maximum revenue; `None` when every window
/// was skipped.
pub fn select_best(per_window: &[WindowOutcome]) -> Option<(usize, f64)> {
    let mut best = None;
    let mut max = f64::NEG_INFINITY;
    for entry in per_window {
        if let Some(revenue) = entry.revenue {
            if revenue > max {
                max = revenue;
                best = Some((entry.window, revenue));
            }
        }
    }
    best
}

/// Run `eval` for every window (in parallel; results merged in grid order).
/// Evaluation failures become skipped entries; the sweep fails only when
/// every window is skipped.
pub fn sweep_with<F>(windows: &[usize], eval: F) -> Result<SweepResult>
where
    F: Fn(usize) -> std::result::Result<f64, String> + Sync,
{
    if windows.is_empty() {
        return Err(Error::Sweep("empty window grid".into()));
    }
    let per_window: Vec<WindowOutcome> = windows
        .par_iter()
        .map(|&window| match eval(window) {
            Ok(revenue) => WindowOutcome {
                window,
                revenue: Some(revenue),
                skipped_reason: None,
            },
            Err(reason) => WindowOutcome {
                window,
                revenue: None,
                skipped_reason: Some(reason),
            },
        })
        .collect();
    let Some((best_window, best_revenue)) = select_best(&per_window) else {
        return Err(Error::Sweep(format!(
            "all {} windows were skipped",
            windows.len()
        )));
    };
    Ok(SweepResult {
        per_window,
        best_window,
        best_revenue,
    })
}

/// Grid-search the training window by net backtest revenue.
pub fn sweep_windows(
    bars: &[Bar],
    windows: &[usize],
    kind: ModelKind,
    settings: &BacktestSettings,
) -> Result<SweepResult> {
    sweep_with(windows, |window| {
        run_backtest(bars, window, kind, settings)
            .map(|run| run.log.net_revenue)
            .map_err(|e| e.to_string())
    })
}
