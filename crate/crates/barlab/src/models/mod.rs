//! The three signal classifiers, their shared training config and JSON
//! persistence.

pub mod bfgs;
mod io;
pub mod logistic;
pub mod mlp;
pub mod svm;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use io::{load_model, read_document, save_model, write_document, ModelDocument, Tensor};
pub use logistic::LogisticModel;
pub use mlp::MlpModel;
pub use svm::SvmModel;

/// Hyperparameters shared by the training routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Convergence threshold: parameter-step norm for gradient descent,
    /// gradient norm for BFGS.
    pub epsilon: f64,
    pub max_iters: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub svm_gamma: f64,
    pub svm_c: f64,
    pub smo_tol: f64,
    pub smo_max_passes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epsilon: 1e-6,
            max_iters: 5000,
            epochs: 100,
            validation_fraction: 0.2,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            svm_gamma: 0.1,
            svm_c: 0.8,
            smo_tol: 1e-3,
            smo_max_passes: 100,
        }
    }
}

impl TrainConfig {
    /// Adam defaults for the dense network, which takes a smaller step than
    /// the descent fits.
    pub fn for_mlp() -> Self {
        Self {
            learning_rate: 0.001,
            ..Self::default()
        }
    }

    /// Default learning rate for the given model kind.
    pub fn default_learning_rate(kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Mlp => 0.001,
            _ => 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.validation_fraction.is_nan()
            || self.validation_fraction <= 0.0
            || self.validation_fraction >= 1.0
        {
            return Err(Error::Domain(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.epsilon.is_nan()
            || self.epsilon <= 0.0
        {
            return Err(Error::Domain(
                "learning rate and epsilon must be positive".into(),
            ));
        }
        if self.max_iters == 0 || self.epochs == 0 {
            return Err(Error::Domain("iteration budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Which classifier to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Logistic regression trained by BFGS (the default fit).
    Logistic,
    /// Logistic regression trained by plain gradient descent.
    LogisticGd,
    Svm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logistic,
        ModelKind::LogisticGd,
        ModelKind::Svm,
        ModelKind::Mlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::LogisticGd => "logistic-gd",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "logistic-gd" => Ok(ModelKind::LogisticGd),
            "svm" => Ok(ModelKind::Svm),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Usage(format!(
                "unknown model `{other}`; expected logistic, logistic-gd, svm or mlp"
            ))),
        }
    }
}

/// A trained classifier ready to emit {0,1} signals.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Logistic(_) => "logistic",
            TrainedModel::Svm(_) => "svm",
            TrainedModel::Mlp(_) => "mlp",
        }
    }
}

/// Binary signal for one standardized feature vector. Boundary cases
/// (probability exactly 0.5, decision value 0, network output 0) map to 0.
pub fn predict_signal(model: &TrainedModel, x: &[f64]) -> Result<u8> {
    match model {
        TrainedModel::Logistic(m) => m.predict(x),
        TrainedModel::Svm(m) => svm::svm_predict(m, x),
        TrainedModel::Mlp(m) => Ok(u8::from(mlp::mlp_forward(m, x)? > 0.0)),
    }
}

/// Train `kind` on the dataset's training rows. SVM labels are remapped
/// {0 -> -1, 1 -> +1} internally; the MLP regresses on the raw change rate.
pub fn train(kind: ModelKind, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    let x = dataset.train_features();
    let labels = dataset.train_labels();
    match kind {
        ModelKind::Logistic => {
            logistic::fit_logistic_bfgs(x, labels, cfg).map(TrainedModel::Logistic)
        }
        ModelKind::LogisticGd => {
            logistic::fit_logistic_gd(x, labels, cfg).map(TrainedModel::Logistic)
        }
        ModelKind::Svm => {
            let signed: Vec<f64> = labels
                .iter()
                .map(|&l| if l == 1 { 1.0 } else { -1.0 })
                .collect();
            svm::fit_svm_smo(x, &signed, cfg.svm_gamma, cfg.svm_c, cfg).map(TrainedModel::Svm)
        }
        ModelKind::Mlp => mlp::fit_mlp(x, dataset.train_raw_change(), cfg).map(TrainedModel::Mlp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    #[test]
    fn logistic_boundary_signal_is_zero() {
        let model = TrainedModel::Logistic(LogisticModel {
            theta: vec![0.0, 0.0],
            trained_loss: 0.0,
            iterations: 0,
        });
        // zero weights give probability exactly 0.5
        assert_eq!(predict_signal(&model, &[3.2]).unwrap(), 0);
    }

    #[test]
    fn mlp_sign_rule() {
        let positive = TrainedModel::Mlp(MlpModel {
            layers: vec![mlp::Layer {
                weights: Array2::zeros((1, 2)),
                bias: Array1::from(vec![0.003]),
            }],
            train_loss: 0.0,
            validation_loss: None,
        });
        let negative = TrainedModel::Mlp(MlpModel {
            layers: vec![mlp::Layer {
                weights: Array2::zeros((1, 2)),
                bias: Array1::from(vec![-0.003]),
            }],
            train_loss: 0.0,
            validation_loss: None,
        });
        assert_eq!(predict_signal(&positive, &[0.0, 0.0]).unwrap(), 1);
        assert_eq!(predict_signal(&negative, &[0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn model_kind_round_trips_through_strings() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("cnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn train_dispatches_every_kind() {
        use crate::data::{build_dataset, SplitMode};
        use chrono::Datelike;
        let changes: Vec<f64> = (0..80)
            .map(|i| 0.03 * (i as f64 * 1.3).sin() + 0.002)
            .collect();
        let mut prev = 10.0;
        let mut day = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let bars: Vec<crate::data::Bar> = changes
            .iter()
            .map(|&c| {
                let latest = prev * (1.0 + c);
                let bar = crate::data::Bar {
                    trade_date: day,
                    prev_close: prev,
                    open: prev * 1.002,
                    high: latest.max(prev) * 1.01,
                    low: latest.min(prev) * 0.99,
                    latest,
                    volume: 900.0 + (day.ordinal() as f64 * 7.0) % 200.0,
                    amount_rmb: latest * 1000.0,
                    change_rate: c,
                };
                prev = latest;
                day = day.succ_opt().unwrap();
                bar
            })
            .collect();
        let dataset = build_dataset(&bars, 60, 0.8, SplitMode::Chronological).unwrap();
        let mut cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        for kind in ModelKind::ALL {
            cfg.learning_rate = TrainConfig::default_learning_rate(kind);
            let model = train(kind, &dataset, &cfg).unwrap();
            let row = dataset.features.row(0);
            let signal = predict_signal(&model, row.as_slice().unwrap()).unwrap();
            assert!(signal <= 1);
        }
    }

    #[test]
    fn predict_signal_is_deterministic_across_threads() {
        let model = TrainedModel::Logistic(LogisticModel {
            theta: vec![0.7, -1.3, 0.2],
            trained_loss: 0.1,
            iterations: 3,
        });
        let inputs: Vec<Vec<f64>> = (0..32)
            .map(|i| vec![0.1 * f64::from(i) - 1.5, 1.5 - 0.09 * f64::from(i)])
            .collect();
        let expected: Vec<u8> = inputs
            .iter()
            .map(|x| predict_signal(&model, x).unwrap())
            .collect();
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| {
                    for (x, want) in inputs.iter().zip(&expected) {
                        assert_eq!(predict_signal(&model, x).unwrap(), *want);
                    }
                });
            }
        });
    }

    #[test]
    fn logistic_predict_shape_error() {
        let model = LogisticModel {
            theta: vec![1.0, 2.0, 0.5],
            trained_loss: 0.0,
            iterations: 1,
        };
        assert!(model.predict(&[1.0]).is_err());
        let _ = array![[1.0]];
    }
}
