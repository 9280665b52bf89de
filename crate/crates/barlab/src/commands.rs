//! The four batch commands behind the CLI: ingest, sweep, backtest and
//! compare. Each validates the full config before writing anything; file
//! writes happen on the main thread after parallel runs join.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::run_backtest;
use crate::config::RunConfig;
use crate::data::{clean_with_summary, parse_table, Bar, CleanSummary};
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainedModel};
use crate::report::{
    aggregate, emit, ReportFormat, ReportRow, ReportTable, RunMetrics, TransactionCounts,
};
use crate::strategy::count_transactions;
use crate::sweep::{sweep_windows, SweepResult};

/// Header of the metrics and compare JSON documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub meta: RunMeta,
    pub runs: Vec<RunMetrics>,
}

fn with_file_context(path: &Path, error: Error) -> Error {
    match error {
        Error::Row { row, message } => Error::Row {
            row,
            message: format!("{}: {message}", path.display()),
        },
        Error::MissingColumn(column) => {
            Error::MissingColumn(format!("{column} (in {})", path.display()))
        }
        other => other,
    }
}

/// A data path is either one CSV file or a directory of them; each file is
/// one stock named by its file stem.
fn discover_inputs(data_path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "stock".to_string())
    };
    if data_path.is_file() {
        return Ok(vec![(stem(data_path), data_path.to_path_buf())]);
    }
    let mut inputs: Vec<(String, PathBuf)> = fs::read_dir(data_path)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (stem(&p), p))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(Error::Domain(format!(
            "no .csv files under {}",
            data_path.display()
        )));
    }
    Ok(inputs)
}

fn load_bars(path: &Path, cfg: &RunConfig) -> Result<(Vec<Bar>, CleanSummary)> {
    let file = fs::File::open(path)?;
    let raw = parse_table(file, &cfg.columns).map_err(|e| with_file_context(path, e))?;
    clean_with_summary(&raw).map_err(|e| with_file_context(path, e))
}

#[derive(Debug, Clone)]
pub struct IngestFileReport {
    pub stock_id: String,
    pub summary: CleanSummary,
    pub rows_written: usize,
    pub output_path: PathBuf,
}

/// Parse and clean every input file, writing one cleaned-bars CSV per stock
/// and reporting row counts at each cleaning stage.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Vec<IngestFileReport>> {
    cfg.validate()?;
    let inputs = discover_inputs(&cfg.data_path)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut reports = Vec::new();
    for (stock_id, path) in inputs {
        let (bars, summary) = load_bars(&path, cfg)?;
        let output_path = cfg.out_dir.join(format!("{stock_id}.cleaned.csv"));
        fs::write(&output_path, cleaned_csv(cfg, &bars))?;
        println!(
            "{stock_id}: {} rows in, {} after dedup, {} after forward fill, {} after volume filter -> {}",
            summary.input_rows,
            summary.after_dedup,
            summary.after_forward_fill,
            summary.after_volume_filter,
            output_path.display()
        );
        reports.push(IngestFileReport {
            stock_id,
            summary,
            rows_written: bars.len(),
            output_path,
        });
    }
    Ok(reports)
}

fn cleaned_csv(cfg: &RunConfig, bars: &[Bar]) -> String {
    let c = &cfg.columns;
    let mut out = cfg.output_header();
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},change rate\n",
        c.trade_date, c.prev_close, c.open, c.volume, c.high, c.low, c.latest, c.amount_rmb
    ));
    for bar in bars {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            bar.trade_date,
            bar.prev_close,
            bar.open,
            bar.volume,
            bar.high,
            bar.low,
            bar.latest,
            bar.amount_rmb,
            bar.change_rate
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub stock_id: String,
    pub model: ModelKind,
    pub result: SweepResult,
    pub output_path: PathBuf,
}

/// Grid-search the training window for every stock and configured model.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepReport>> {
    cfg.validate()?;
    let inputs = discover_inputs(&cfg.data_path)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut reports = Vec::new();
    for (stock_id, path) in inputs {
        let (bars, _) = load_bars(&path, cfg)?;
        for &kind in &cfg.models {
            let settings = cfg.backtest_settings(kind);
            let result = sweep_windows(&bars, &cfg.sweep_grid, kind, &settings)?;
            let output_path = cfg.out_dir.join(format!("sweep_{stock_id}_{kind}.csv"));
            fs::write(
                &output_path,
                format!("{}{}", cfg.output_header(), result.to_csv()),
            )?;
            println!(
                "{stock_id} {kind}: best window {} (revenue {:.6}%) -> {}",
                result.best_window,
                result.best_revenue,
                output_path.display()
            );
            reports.push(SweepReport {
                stock_id: stock_id.clone(),
                model: kind,
                result,
                output_path,
            });
        }
    }
    Ok(reports)
}

#[derive(Debug)]
pub struct BacktestReport {
    pub metrics: Vec<RunMetrics>,
    pub failures: Vec<(String, ModelKind, String)>,
    pub warnings: Vec<String>,
    pub metrics_path: PathBuf,
    pub timings_path: PathBuf,
}

/// Train, predict and replay every (stock, model) pair. Per-run failures
/// do not stop the other runs; the command fails only when nothing
/// succeeded. Metrics are written to one deterministic JSON file, wall
/// times to a sidecar CSV.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<BacktestReport> {
    cfg.validate()?;
    let inputs = discover_inputs(&cfg.data_path)?;
    fs::create_dir_all(&cfg.out_dir)?;

    struct RunOutput {
        metrics: RunMetrics,
        plot_csv: String,
        warning: Option<String>,
    }

    let outcomes: Vec<(String, ModelKind, Result<RunOutput>)> = inputs
        .par_iter()
        .flat_map(|(stock_id, path)| {
            let per_stock: Vec<(String, ModelKind, Result<RunOutput>)> = match load_bars(path, cfg)
            {
                Err(e) => cfg
                    .models
                    .iter()
                    .map(|&kind| (stock_id.clone(), kind, Err(clone_error(&e))))
                    .collect(),
                Ok((bars, _)) => cfg
                    .models
                    .iter()
                    .map(|&kind| {
                        let settings = cfg.backtest_settings(kind);
                        let outcome =
                            run_backtest(&bars, cfg.window, kind, &settings).map(|run| {
                                let (buys, sells, total) = count_transactions(&run.log);
                                let warning = match &run.model {
                                    TrainedModel::Svm(m) if !m.converged => Some(format!(
                                        "{stock_id} {kind}: smo stopped early, max KKT violation {:.3e}",
                                        m.max_kkt_violation
                                    )),
                                    _ => None,
                                };
                                RunOutput {
                                    metrics: RunMetrics {
                                        stock_id: stock_id.clone(),
                                        model_kind: kind,
                                        strategy_kind: cfg.strategy,
                                        total_time: run.elapsed_seconds,
                                        total_revenue: run.log.net_revenue,
                                        train_accuracy: run.train_accuracy,
                                        test_accuracy: run.test_accuracy,
                                        counts: TransactionCounts { buys, sells, total },
                                    },
                                    plot_csv: run.log.to_plot_csv(),
                                    warning,
                                }
                            });
                        (stock_id.clone(), kind, outcome)
                    })
                    .collect(),
            };
            per_stock
        })
        .collect();

    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (stock_id, kind, outcome) in outcomes {
        match outcome {
            Ok(output) => {
                let plot_path = cfg.out_dir.join(format!(
                    "plot_{stock_id}_{kind}_{}.csv",
                    cfg.strategy.as_str()
                ));
                fs::write(
                    &plot_path,
                    format!("{}{}", cfg.output_header(), output.plot_csv),
                )?;
                if let Some(warning) = output.warning {
                    warnings.push(warning);
                }
                metrics.push(output.metrics);
            }
            Err(e) => failures.push((stock_id, kind, e.to_string())),
        }
    }
    metrics.sort_by(|a, b| {
        (&a.stock_id, a.model_kind.as_str()).cmp(&(&b.stock_id, b.model_kind.as_str()))
    });

    if metrics.is_empty() {
        let detail = failures
            .first()
            .map(|(s, k, e)| format!("{s} {k}: {e}"))
            .unwrap_or_default();
        return Err(Error::Domain(format!(
            "every run failed; first error: {detail}"
        )));
    }

    let metrics_path = cfg.out_dir.join("metrics.json");
    let file = MetricsFile {
        meta: RunMeta {
            seed: cfg.seed,
            config: cfg.config_hash(),
        },
        runs: metrics.clone(),
    };
    fs::write(&metrics_path, serde_json::to_string_pretty(&file)?)?;

    let timings_path = cfg.out_dir.join("timings.csv");
    let mut timings = cfg.output_header();
    timings.push_str("stock_id,model,strategy,seconds\n");
    for m in &metrics {
        timings.push_str(&format!(
            "{},{},{},{}\n",
            m.stock_id, m.model_kind, m.strategy_kind, m.total_time
        ));
    }
    fs::write(&timings_path, timings)?;

    for warning in &warnings {
        println!("warning: {warning}");
    }
    for (stock, kind, error) in &failures {
        println!("failed: {stock} {kind}: {error}");
    }
    println!(
        "{} runs ({} failed) -> {}",
        metrics.len(),
        failures.len(),
        metrics_path.display()
    );

    Ok(BacktestReport {
        metrics,
        failures,
        warnings,
        metrics_path,
        timings_path,
    })
}

fn clone_error(e: &Error) -> Error {
    Error::Domain(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTable {
    pub model: String,
    pub table: ReportTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareFile {
    pub meta: RunMeta,
    pub tables: Vec<ModelTable>,
    pub counts: Option<ReportTable>,
}

/// Aggregate a completed backtest run set into per-model comparison tables
/// plus a transaction-count table across models.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareFile> {
    cfg.validate()?;
    let metrics_path = cfg.out_dir.join("metrics.json");
    if !metrics_path.exists() {
        return Err(Error::Usage(format!(
            "no completed runs: {} not found (run backtest first)",
            metrics_path.display()
        )));
    }
    let file: MetricsFile = serde_json::from_str(&fs::read_to_string(&metrics_path)?)?;
    if file.runs.is_empty() {
        return Err(Error::Usage("metrics file contains no runs".into()));
    }
    let mut runs = file.runs;
    fill_timings(&mut runs, &cfg.out_dir.join("timings.csv"))?;

    // group by model kind in first-appearance order
    let mut order: Vec<ModelKind> = Vec::new();
    for run in &runs {
        if !order.contains(&run.model_kind) {
            order.push(run.model_kind);
        }
    }
    let mut tables = Vec::new();
    for kind in &order {
        let group: Vec<RunMetrics> = runs
            .iter()
            .filter(|r| r.model_kind == *kind)
            .cloned()
            .collect();
        let table = aggregate(&group)?;
        let csv_path = cfg.out_dir.join(format!("compare_{kind}.csv"));
        fs::write(
            &csv_path,
            format!(
                "{}{}",
                cfg.output_header(),
                emit(&table, ReportFormat::Csv)?
            ),
        )?;
        println!("{kind}: {} stocks -> {}", group.len(), csv_path.display());
        tables.push(ModelTable {
            model: kind.to_string(),
            table,
        });
    }

    let counts = counts_table(&runs, &order);
    if let Some(counts) = &counts {
        fs::write(
            cfg.out_dir.join("compare_counts.csv"),
            format!(
                "{}{}",
                cfg.output_header(),
                emit(counts, ReportFormat::Csv)?
            ),
        )?;
    }

    let compare = CompareFile {
        meta: RunMeta {
            seed: cfg.seed,
            config: cfg.config_hash(),
        },
        tables,
        counts,
    };
    fs::write(
        cfg.out_dir.join("compare.json"),
        serde_json::to_string_pretty(&compare)?,
    )?;
    Ok(compare)
}

/// Counts table across models (three rows per model), over the stocks that
/// every model covered.
fn counts_table(runs: &[RunMetrics], order: &[ModelKind]) -> Option<ReportTable> {
    let stocks: Vec<String> = {
        let all: BTreeSet<&str> = runs.iter().map(|r| r.stock_id.as_str()).collect();
        all.into_iter()
            .filter(|stock| {
                order.iter().all(|kind| {
                    runs.iter()
                        .any(|r| r.stock_id == *stock && r.model_kind == *kind)
                })
            })
            .map(String::from)
            .collect()
    };
    if stocks.is_empty() {
        return None;
    }
    let mut columns = stocks.clone();
    columns.push("Avg.".into());
    let mut rows = Vec::new();
    for kind in order {
        for (label, get) in [
            (
                "buys",
                (|c: &TransactionCounts| c.buys) as fn(&TransactionCounts) -> u32,
            ),
            ("sells", |c| c.sells),
            ("total", |c| c.total),
        ] {
            let mut values: Vec<f64> = stocks
                .iter()
                .map(|stock| {
                    let run = runs
                        .iter()
                        .find(|r| r.stock_id == *stock && r.model_kind == *kind)
                        .expect("stock covered by every model");
                    f64::from(get(&run.counts))
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.push(mean);
            rows.push(ReportRow {
                label: format!("{kind} {label}"),
                values,
            });
        }
    }
    Some(ReportTable { columns, rows })
}

fn fill_timings(runs: &mut [RunMetrics], timings_path: &Path) -> Result<()> {
    if !timings_path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(timings_path)?;
    for line in text.lines().skip_while(|l| l.starts_with('#')).skip(1) {
        let mut parts = line.split(',');
        let (Some(stock), Some(model), Some(strategy), Some(seconds)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            continue;
        };
        let Ok(seconds) = seconds.parse::<f64>() else {
            continue;
        };
        for run in runs.iter_mut() {
            if run.stock_id == stock
                && run.model_kind.as_str() == model
                && run.strategy_kind.as_str() == strategy
            {
                run.total_time = seconds;
            }
        }
    }
    Ok(())
}
