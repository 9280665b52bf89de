//! Run metrics and their aggregation into per-stock tables with an
//! unweighted Avg column, emitted as CSV or JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::strategy::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionCounts {
    pub buys: u32,
    pub sells: u32,
    pub total: u32,
}

/// Metrics of one (stock, model, strategy) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub stock_id: String,
    pub model_kind: ModelKind,
    pub strategy_kind: StrategyKind,
    /// Wall time of fit, prediction and replay. Written to the timings
    /// sidecar, never to the metrics JSON, so result files stay
    /// byte-deterministic.
    #[serde(skip_serializing, default)]
    pub total_time: f64,
    pub total_revenue: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub counts: TransactionCounts,
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "accuracy needs equal non-empty lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let matches = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(matches as f64 / y_true.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// Metric rows by stock columns, the final column being the average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    /// The table with every value rounded to six decimal places.
    pub fn rounded(&self) -> ReportTable {
        ReportTable {
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .map(|row| ReportRow {
                    label: row.label.clone(),
                    values: row.values.iter().map(|&v| round6(v)).collect(),
                })
                .collect(),
        }
    }
}

fn round6(value: f64) -> f64 {
    format!("{value:.6}").parse().expect("formatted float")
}

/// Sum in a fixed value order so the mean never depends on column order.
fn stable_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

type MetricGetter = fn(&RunMetrics) -> f64;

/// Aggregate runs into the standard table: one column per run in input
/// order plus an Avg column of unweighted means.
pub fn aggregate(runs: &[RunMetrics]) -> Result<ReportTable> {
    if runs.is_empty() {
        return Err(Error::Usage("cannot aggregate zero runs".into()));
    }
    let mut columns: Vec<String> = runs.iter().map(|r| r.stock_id.clone()).collect();
    columns.push("Avg.".into());
    let metrics: [(&str, MetricGetter); 7] = [
        ("total_time(s)", |r| r.total_time),
        ("total_revenue(%)", |r| r.total_revenue),
        ("train_accuracy", |r| r.train_accuracy),
        ("test_accuracy", |r| r.test_accuracy),
        ("buys", |r| f64::from(r.counts.buys)),
        ("sells", |r| f64::from(r.counts.sells)),
        ("total", |r| f64::from(r.counts.total)),
    ];
    let rows = metrics
        .iter()
        .map(|(label, get)| {
            let mut values: Vec<f64> = runs.iter().map(get).collect();
            values.push(stable_mean(&values));
            ReportRow {
                label: (*label).to_string(),
                values,
            }
        })
        .collect();
    Ok(ReportTable { columns, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Render a table with values at six decimal places. Emission is
/// deterministic: the same table always yields identical bytes.
pub fn emit(table: &ReportTable, format: ReportFormat) -> Result<String> {
    let rounded = table.rounded();
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("metric");
            for column in &rounded.columns {
                out.push(',');
                out.push_str(column);
            }
            out.push('\n');
            for row in &rounded.rows {
                out.push_str(&row.label);
                for value in &row.values {
                    out.push_str(&format!(",{value:.6}"));
                }
                out.push('\n');
            }
            Ok(out)
        }
        ReportFormat::Json => Ok(serde_json::to_string_pretty(&rounded)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(stock: &str, revenue: f64) -> RunMetrics {
        RunMetrics {
            stock_id: stock.to_string(),
            model_kind: ModelKind::Logistic,
            strategy_kind: StrategyKind::Simple,
            total_time: 1.0,
            total_revenue: revenue,
            train_accuracy: 0.9,
            test_accuracy: 0.8,
            counts: TransactionCounts {
                buys: 3,
                sells: 2,
                total: 5,
            },
        }
    }

    #[test]
    fn accuracy_fixtures() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 0, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 0]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn single_run_average_equals_the_run() {
        let table = aggregate(&[run("A", 1.5)]).unwrap();
        assert_eq!(table.columns, vec!["A".to_string(), "Avg.".to_string()]);
        for row in &table.rows {
            assert_eq!(row.values[0], row.values[1], "row {}", row.label);
        }
    }

    #[test]
    fn two_run_average() {
        let table = aggregate(&[run("A", 1.0), run("B", 3.0)]).unwrap();
        let revenue = table
            .rows
            .iter()
            .find(|r| r.label == "total_revenue(%)")
            .unwrap();
        assert_eq!(revenue.values, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn aggregate_of_nothing_is_usage_error() {
        assert!(matches!(aggregate(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn average_is_permutation_invariant() {
        let runs: Vec<RunMetrics> = (0..7)
            .map(|i| run(&format!("S{i}"), 0.1 * f64::from(i) - 0.23))
            .collect();
        let base = aggregate(&runs).unwrap();
        let mut shuffled = runs.clone();
        shuffled.rotate_left(3);
        shuffled.swap(0, 4);
        let permuted = aggregate(&shuffled).unwrap();
        for (a, b) in base.rows.iter().zip(&permuted.rows) {
            assert_eq!(
                a.values.last().unwrap().to_bits(),
                b.values.last().unwrap().to_bits(),
                "row {}",
                a.label
            );
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let table = aggregate(&[run("A", 1.0), run("B", 2.0)]).unwrap();
        assert_eq!(
            emit(&table, ReportFormat::Csv).unwrap(),
            emit(&table, ReportFormat::Csv).unwrap()
        );
        assert_eq!(
            emit(&table, ReportFormat::Json).unwrap(),
            emit(&table, ReportFormat::Json).unwrap()
        );
    }

    #[test]
    fn json_round_trips_to_the_rounded_table() {
        let table = aggregate(&[run("A", 1.0 / 3.0), run("B", 0.725997496)]).unwrap();
        let text = emit(&table, ReportFormat::Json).unwrap();
        let parsed: ReportTable = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, table.rounded());
        // a second emission of the parsed table is a fixed point
        assert_eq!(emit(&parsed, ReportFormat::Json).unwrap(), text);
    }

    #[test]
    fn csv_renders_six_decimals() {
        let table = aggregate(&[run("A", 0.3953986451)]).unwrap();
        let csv = emit(&table, ReportFormat::Csv).unwrap();
        assert!(csv.contains("total_revenue(%),0.395399,0.395399"));
        assert!(csv.starts_with("metric,A,Avg.\n"));
    }

    #[test]
    fn counts_satisfy_total_identity() {
        let table = aggregate(&[run("A", 1.0), run("B", 2.0)]).unwrap();
        let get = |label: &str| -> Vec<f64> {
            table
                .rows
                .iter()
                .find(|r| r.label == label)
                .unwrap()
                .values
                .clone()
        };
        let (buys, sells, total) = (get("buys"), get("sells"), get("total"));
        for i in 0..total.len() {
            assert_eq!(buys[i] + sells[i], total[i]);
        }
    }
}
