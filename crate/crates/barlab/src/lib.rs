//! Daily-bar learning and backtesting toolkit.
//!
//! Cleans raw daily-bar tables, trains three signal classifiers from
//! scratch (logistic regression by BFGS or gradient descent, an RBF SVM by
//! sequential minimal optimization, and a dense rectifier network by Adam),
//! grid-searches the training-window length by backtest revenue, and
//! replays two trading strategies with fee-adjusted reporting.
//!
//! See the `examples/` directory for one runnable program per capability;
//! the `barlab` binary wires the same library into four batch subcommands
//! (`ingest`, `sweep`, `backtest`, `compare`).

pub mod backtest;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod models;
pub mod report;
pub mod strategy;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
