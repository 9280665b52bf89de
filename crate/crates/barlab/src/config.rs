//! Run configuration: a sectioned TOML file merged with flag overrides and
//! one environment override, validated before any command runs.
//!
//! Precedence: flags, then `BARLAB_OUT` (output directory only), then the
//! config file, then defaults. The config hash covers the semantic
//! parameters and the seed but not file locations, so moving data between
//! machines does not change it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::BacktestSettings;
use crate::data::{ColumnMap, SplitMode};
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use crate::strategy::{StrategyKind, ThresholdConfig};
use crate::sweep::DEFAULT_WINDOW_GRID;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "BARLAB_OUT";

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub columns: ColumnMap,
    pub window: usize,
    pub sweep_grid: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub strategy: StrategyKind,
    pub thresholds: ThresholdConfig,
    /// Accepted for config fidelity with the threshold rule's inputs;
    /// nothing reads it.
    pub shorts: f64,
    pub fee: f64,
    pub notional: f64,
    pub split_mode: SplitModeKind,
    pub split_fraction: f64,
    pub train: TrainFileSection,
}

/// Split mode named in config; the seed is injected when building settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitModeKind {
    Chrono,
    Shuffle,
}

impl std::str::FromStr for SplitModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chrono" => Ok(SplitModeKind::Chrono),
            "shuffle" => Ok(SplitModeKind::Shuffle),
            other => Err(Error::Usage(format!(
                "unknown split mode `{other}`; expected chrono or shuffle"
            ))),
        }
    }
}

/// Training hyperparameters as configured; the learning rate is optional so
/// each model kind can fall back to its own default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFileSection {
    pub learning_rate: Option<f64>,
    pub epsilon: f64,
    pub max_iters: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub svm_gamma: f64,
    pub svm_c: f64,
    pub smo_tol: f64,
    pub smo_max_passes: usize,
}

impl Default for TrainFileSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            learning_rate: None,
            epsilon: base.epsilon,
            max_iters: base.max_iters,
            epochs: base.epochs,
            validation_fraction: base.validation_fraction,
            adam_beta1: base.adam_beta1,
            adam_beta2: base.adam_beta2,
            adam_eps: base.adam_eps,
            svm_gamma: base.svm_gamma,
            svm_c: base.svm_c,
            smo_tol: base.smo_tol,
            smo_max_passes: base.smo_max_passes,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    data: DataSection,
    run: RunSection,
    model: ModelSection,
    split: SplitSection,
    strategy: StrategySection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DataSection {
    path: Option<PathBuf>,
    columns: Option<ColumnMap>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    kinds: Option<Vec<String>>,
    window: Option<usize>,
    sweep_grid: Option<Vec<usize>>,
    #[serde(flatten)]
    train: Option<TrainFileSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SplitSection {
    mode: Option<String>,
    fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StrategySection {
    kind: Option<String>,
    buy_threshold: Option<f64>,
    sell_threshold: Option<f64>,
    shorts: Option<f64>,
    fee: Option<f64>,
    notional: Option<f64>,
}

/// Flag overrides collected by the CLI; every field beats the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub models: Vec<String>,
    pub strategy: Option<String>,
    pub buy_threshold: Option<f64>,
    pub sell_threshold: Option<f64>,
    pub fee: Option<f64>,
    pub notional: Option<f64>,
    pub window: Option<usize>,
    pub split: Option<String>,
}

impl RunConfig {
    /// Merge defaults, the optional config file, the environment override
    /// and flag overrides, in increasing precedence.
    pub fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        let file: FileConfig = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let models = if !overrides.models.is_empty() {
            overrides
                .models
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<ModelKind>>>()?
        } else if let Some(kinds) = &file.model.kinds {
            kinds.iter().map(|m| m.parse()).collect::<Result<_>>()?
        } else {
            vec![ModelKind::Logistic]
        };

        let strategy = match overrides.strategy.as_deref() {
            Some(s) => s.parse()?,
            None => match file.strategy.kind.as_deref() {
                Some(s) => s.parse()?,
                None => StrategyKind::Simple,
            },
        };

        let split_mode = match overrides.split.as_deref() {
            Some(s) => s.parse()?,
            None => match file.split.mode.as_deref() {
                Some(s) => s.parse()?,
                None => SplitModeKind::Chrono,
            },
        };

        let out_dir = overrides
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or(file.run.out_dir)
            .unwrap_or_else(|| PathBuf::from("out"));

        let defaults = ThresholdConfig::default();
        Ok(RunConfig {
            data_path: overrides.data.clone().or(file.data.path).ok_or_else(|| {
                Error::Config("no data path given (flag --data or [data] path)".into())
            })?,
            out_dir,
            seed: overrides.seed.or(file.run.seed).unwrap_or(42),
            columns: file.data.columns.unwrap_or_default(),
            window: overrides.window.or(file.model.window).unwrap_or(366),
            sweep_grid: file
                .model
                .sweep_grid
                .unwrap_or_else(|| DEFAULT_WINDOW_GRID.to_vec()),
            models,
            strategy,
            thresholds: ThresholdConfig {
                buy_threshold: overrides
                    .buy_threshold
                    .or(file.strategy.buy_threshold)
                    .unwrap_or(defaults.buy_threshold),
                sell_threshold: overrides
                    .sell_threshold
                    .or(file.strategy.sell_threshold)
                    .unwrap_or(defaults.sell_threshold),
            },
            shorts: file.strategy.shorts.unwrap_or(0.0),
            fee: overrides.fee.or(file.strategy.fee).unwrap_or(0.0),
            notional: overrides
                .notional
                .or(file.strategy.notional)
                .unwrap_or(1000.0),
            split_mode,
            split_fraction: file.split.fraction.unwrap_or(0.8),
            train: file.model.train.unwrap_or_default(),
        })
    }

    /// Full validation, run before any side effect.
    pub fn validate(&self) -> Result<()> {
        if !self.data_path.exists() {
            return Err(Error::Config(format!(
                "data path {} does not exist",
                self.data_path.display()
            )));
        }
        if self.split_fraction.is_nan() || self.split_fraction <= 0.0 || self.split_fraction >= 1.0
        {
            return Err(Error::Config(format!(
                "split fraction must be in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.fee.is_nan() || self.fee < 0.0 {
            return Err(Error::Config(format!(
                "fee must be nonnegative, got {}",
                self.fee
            )));
        }
        if self.notional.is_nan() || self.notional <= 0.0 {
            return Err(Error::Config(format!(
                "notional must be positive, got {}",
                self.notional
            )));
        }
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window must be at least 2 days, got {}",
                self.window
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no model kinds configured".into()));
        }
        if self.sweep_grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if !self.thresholds.buy_threshold.is_finite() || !self.thresholds.sell_threshold.is_finite()
        {
            return Err(Error::Config("thresholds must be finite".into()));
        }
        self.train_config(self.models[0])
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Training config for a model kind, falling back to the kind's default
    /// learning rate when none is configured.
    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        TrainConfig {
            learning_rate: self
                .train
                .learning_rate
                .unwrap_or_else(|| TrainConfig::default_learning_rate(kind)),
            epsilon: self.train.epsilon,
            max_iters: self.train.max_iters,
            epochs: self.train.epochs,
            validation_fraction: self.train.validation_fraction,
            seed: self.seed,
            adam_beta1: self.train.adam_beta1,
            adam_beta2: self.train.adam_beta2,
            adam_eps: self.train.adam_eps,
            svm_gamma: self.train.svm_gamma,
            svm_c: self.train.svm_c,
            smo_tol: self.train.smo_tol,
            smo_max_passes: self.train.smo_max_passes,
        }
    }

    /// Backtest settings for a model kind.
    pub fn backtest_settings(&self, kind: ModelKind) -> BacktestSettings {
        BacktestSettings {
            split_fraction: self.split_fraction,
            split_mode: match self.split_mode {
                SplitModeKind::Chrono => SplitMode::Chronological,
                SplitModeKind::Shuffle => SplitMode::Shuffled { seed: self.seed },
            },
            strategy: self.strategy,
            thresholds: self.thresholds,
            fee: self.fee,
            notional: self.notional,
            train: self.train_config(kind),
        }
    }

    /// Hash of the semantic parameters (paths excluded).
    pub fn config_hash(&self) -> String {
        let mut canon = String::new();
        canon.push_str(&format!("seed={};", self.seed));
        canon.push_str(&format!("columns={:?};", self.columns));
        canon.push_str(&format!("window={};", self.window));
        canon.push_str(&format!("grid={:?};", self.sweep_grid));
        canon.push_str(&format!(
            "models={:?};",
            self.models
                .iter()
                .map(ModelKind::as_str)
                .collect::<Vec<_>>()
        ));
        canon.push_str(&format!("strategy={};", self.strategy.as_str()));
        canon.push_str(&format!(
            "thresholds={:?}/{:?};shorts={:?};fee={:?};notional={:?};",
            self.thresholds.buy_threshold,
            self.thresholds.sell_threshold,
            self.shorts,
            self.fee,
            self.notional
        ));
        canon.push_str(&format!(
            "split={:?}/{:?};",
            self.split_mode, self.split_fraction
        ));
        canon.push_str(&format!("train={:?}", self.train));
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Comment line embedded at the top of generated CSV files.
    pub fn output_header(&self) -> String {
        format!("# seed={} config={}\n", self.seed, self.config_hash())
    }
}
