//! Thin command-line front end; all work lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use barlab::commands::{cmd_backtest, cmd_compare, cmd_ingest, cmd_sweep};
use barlab::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "barlab",
    about = "Train daily-bar signal classifiers, search training windows and backtest strategies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and clean raw bar tables into cleaned-bars CSV files
    Ingest,
    /// Grid-search the training-window length by backtest revenue
    Sweep,
    /// Train, predict and replay the configured strategy per stock
    Backtest,
    /// Aggregate completed runs into per-model comparison tables
    Compare,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file (TOML); flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Input CSV file or directory of CSVs (one stock per file)
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Seed for every random choice in the run
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Model kind (repeatable): logistic, logistic-gd, svm, mlp
    #[arg(long = "model", global = true, value_name = "KIND")]
    models: Vec<String>,
    /// Strategy: simple or threshold
    #[arg(long, global = true, value_name = "KIND")]
    strategy: Option<String>,
    /// Add-on gain gate for the threshold strategy
    #[arg(long, global = true, value_name = "F")]
    buy_threshold: Option<f64>,
    /// Exit gain gate for the threshold strategy
    #[arg(long, global = true, value_name = "F")]
    sell_threshold: Option<f64>,
    /// Flat fee per transaction
    #[arg(long, global = true, value_name = "F")]
    fee: Option<f64>,
    /// Notional position size used to normalize fees
    #[arg(long, global = true, value_name = "F")]
    notional: Option<f64>,
    /// Training-window length in days
    #[arg(long, global = true, value_name = "N")]
    window: Option<usize>,
    /// Train/test split mode: chrono or shuffle
    #[arg(long, global = true, value_name = "MODE")]
    split: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        data: cli.common.data,
        seed: cli.common.seed,
        out: cli.common.out,
        models: cli.common.models,
        strategy: cli.common.strategy,
        buy_threshold: cli.common.buy_threshold,
        sell_threshold: cli.common.sell_threshold,
        fee: cli.common.fee,
        notional: cli.common.notional,
        window: cli.common.window,
        split: cli.common.split,
    };
    let run = || -> barlab::Result<()> {
        let cfg = RunConfig::resolve(cli.common.config.as_deref(), &overrides)?;
        match cli.command {
            Command::Ingest => {
                cmd_ingest(&cfg)?;
            }
            Command::Sweep => {
                cmd_sweep(&cfg)?;
            }
            Command::Backtest => {
                cmd_backtest(&cfg)?;
            }
            Command::Compare => {
                cmd_compare(&cfg)?;
            }
        }
        Ok(())
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_class() as u8)
        }
    }
}
