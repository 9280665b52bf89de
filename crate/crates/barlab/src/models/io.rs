//! Model persistence: one JSON document per model carrying the kind,
//! hyperparameters, seed and parameter arrays in row-major order with
//! explicit shapes. Floats are rendered with 17 significant digits, which
//! reparse to bit-identical values.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::logistic::LogisticModel;
use crate::models::mlp::{Layer, MlpModel};
use crate::models::svm::SvmModel;
use crate::models::{TrainConfig, TrainedModel};

/// A parameter array with its shape; `data` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    fn to_array2(&self) -> Result<Array2<f64>> {
        if self.shape.len() != 2 {
            return Err(Error::Shape(format!(
                "expected a rank-2 tensor, got shape {:?}",
                self.shape
            )));
        }
        Array2::from_shape_vec((self.shape[0], self.shape[1]), self.data.clone())
            .map_err(|e| Error::Shape(e.to_string()))
    }

    fn check_vector(&self) -> Result<&[f64]> {
        if self.shape.len() != 1 || self.shape[0] != self.data.len() {
            return Err(Error::Shape(format!(
                "expected a rank-1 tensor of length {}, got shape {:?}",
                self.data.len(),
                self.shape
            )));
        }
        Ok(&self.data)
    }
}

/// Serialized form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelDocument {
    Logistic {
        seed: u64,
        learning_rate: f64,
        epsilon: f64,
        max_iters: usize,
        trained_loss: f64,
        iterations: usize,
        theta: Tensor,
    },
    Svm {
        seed: u64,
        gamma: f64,
        c: f64,
        tol: f64,
        max_passes: usize,
        bias: f64,
        max_kkt_violation: f64,
        converged: bool,
        support_vectors: Tensor,
        alphas: Tensor,
        sv_labels: Tensor,
    },
    Mlp {
        seed: u64,
        learning_rate: f64,
        epochs: usize,
        validation_fraction: f64,
        adam_beta1: f64,
        adam_beta2: f64,
        adam_eps: f64,
        train_loss: f64,
        validation_loss: Option<f64>,
        weights: Vec<Tensor>,
        biases: Vec<Tensor>,
    },
}

impl ModelDocument {
    pub fn from_model(model: &TrainedModel, cfg: &TrainConfig) -> Result<Self> {
        let doc = match model {
            TrainedModel::Logistic(m) => ModelDocument::Logistic {
                seed: cfg.seed,
                learning_rate: cfg.learning_rate,
                epsilon: cfg.epsilon,
                max_iters: cfg.max_iters,
                trained_loss: m.trained_loss,
                iterations: m.iterations,
                theta: Tensor::vector(m.theta.clone()),
            },
            TrainedModel::Svm(m) => {
                let rows = m.support_vectors.len();
                let cols = m.support_vectors.first().map_or(0, Vec::len);
                let data = m.support_vectors.iter().flatten().copied().collect();
                ModelDocument::Svm {
                    seed: cfg.seed,
                    gamma: m.gamma,
                    c: m.c,
                    tol: cfg.smo_tol,
                    max_passes: cfg.smo_max_passes,
                    bias: m.bias,
                    max_kkt_violation: m.max_kkt_violation,
                    converged: m.converged,
                    support_vectors: Tensor::matrix(rows, cols, data),
                    alphas: Tensor::vector(m.alphas.clone()),
                    sv_labels: Tensor::vector(m.sv_labels.clone()),
                }
            }
            TrainedModel::Mlp(m) => ModelDocument::Mlp {
                seed: cfg.seed,
                learning_rate: cfg.learning_rate,
                epochs: cfg.epochs,
                validation_fraction: cfg.validation_fraction,
                adam_beta1: cfg.adam_beta1,
                adam_beta2: cfg.adam_beta2,
                adam_eps: cfg.adam_eps,
                train_loss: m.train_loss,
                validation_loss: m.validation_loss,
                weights: m
                    .layers
                    .iter()
                    .map(|l| {
                        let (rows, cols) = l.weights.dim();
                        Tensor::matrix(rows, cols, l.weights.iter().copied().collect())
                    })
                    .collect(),
                biases: m
                    .layers
                    .iter()
                    .map(|l| Tensor::vector(l.bias.to_vec()))
                    .collect(),
            },
        };
        doc.check_finite()?;
        Ok(doc)
    }

    pub fn to_model(&self) -> Result<TrainedModel> {
        match self {
            ModelDocument::Logistic {
                trained_loss,
                iterations,
                theta,
                ..
            } => Ok(TrainedModel::Logistic(LogisticModel {
                theta: theta.check_vector()?.to_vec(),
                trained_loss: *trained_loss,
                iterations: *iterations,
            })),
            ModelDocument::Svm {
                gamma,
                c,
                bias,
                max_kkt_violation,
                converged,
                support_vectors,
                alphas,
                sv_labels,
                ..
            } => {
                let matrix = support_vectors.to_array2()?;
                let alphas = alphas.check_vector()?.to_vec();
                let sv_labels = sv_labels.check_vector()?.to_vec();
                if matrix.nrows() != alphas.len() || alphas.len() != sv_labels.len() {
                    return Err(Error::Shape(
                        "support vectors, alphas and labels disagree in length".into(),
                    ));
                }
                Ok(TrainedModel::Svm(SvmModel {
                    support_vectors: matrix.rows().into_iter().map(|r| r.to_vec()).collect(),
                    alphas,
                    sv_labels,
                    bias: *bias,
                    gamma: *gamma,
                    c: *c,
                    max_kkt_violation: *max_kkt_violation,
                    converged: *converged,
                }))
            }
            ModelDocument::Mlp {
                train_loss,
                validation_loss,
                weights,
                biases,
                ..
            } => {
                if weights.len() != biases.len() || weights.is_empty() {
                    return Err(Error::Shape(
                        "weight and bias tensor lists disagree in length".into(),
                    ));
                }
                let layers = weights
                    .iter()
                    .zip(biases)
                    .map(|(w, b)| {
                        Ok(Layer {
                            weights: w.to_array2()?,
                            bias: Array1::from(b.check_vector()?.to_vec()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrainedModel::Mlp(MlpModel {
                    layers,
                    train_loss: *train_loss,
                    validation_loss: *validation_loss,
                }))
            }
        }
    }

    fn check_finite(&self) -> Result<()> {
        let tensors: Vec<&Tensor> = match self {
            ModelDocument::Logistic { theta, .. } => vec![theta],
            ModelDocument::Svm {
                support_vectors,
                alphas,
                sv_labels,
                ..
            } => vec![support_vectors, alphas, sv_labels],
            ModelDocument::Mlp {
                weights, biases, ..
            } => weights.iter().chain(biases).collect(),
        };
        for tensor in tensors {
            if tensor.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(
                    "model contains a non-finite parameter".into(),
                ));
            }
        }
        Ok(())
    }
}

/// JSON formatter writing every float with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn write_document<W: Write>(writer: W, doc: &ModelDocument) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, SciFormatter);
    doc.serialize(&mut ser)?;
    Ok(())
}

pub fn read_document<R: Read>(reader: R) -> Result<ModelDocument> {
    Ok(serde_json::from_reader(reader)?)
}

/// Serialize a trained model with the config that produced it.
pub fn save_model<W: Write>(writer: W, model: &TrainedModel, cfg: &TrainConfig) -> Result<()> {
    write_document(writer, &ModelDocument::from_model(model, cfg)?)
}

/// Load a model previously written by [`save_model`].
pub fn load_model<R: Read>(reader: R) -> Result<TrainedModel> {
    read_document(reader)?.to_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample_models() -> Vec<TrainedModel> {
        vec![
            TrainedModel::Logistic(LogisticModel {
                theta: vec![0.1, -2.5e-7, 1.0 / 3.0, 4.9],
                trained_loss: std::f64::consts::LN_2,
                iterations: 17,
            }),
            TrainedModel::Svm(SvmModel {
                support_vectors: vec![vec![0.25, -1.75], vec![1e-9, 2.0f64.sqrt()]],
                alphas: vec![0.8, 0.123456789012345],
                sv_labels: vec![1.0, -1.0],
                bias: -0.0625,
                gamma: 0.1,
                c: 0.8,
                max_kkt_violation: 3.2e-4,
                converged: true,
            }),
            TrainedModel::Mlp(MlpModel {
                layers: vec![
                    Layer {
                        weights: array![[0.3, -0.7], [1.0 / 7.0, 2.5]],
                        bias: array![0.0, -0.5],
                    },
                    Layer {
                        weights: array![[0.9, 1e-300]],
                        bias: array![0.125],
                    },
                ],
                train_loss: 1.5e-3,
                validation_loss: Some(2.5e-3),
            }),
        ]
    }

    fn params(model: &TrainedModel) -> Vec<f64> {
        match model {
            TrainedModel::Logistic(m) => m.theta.clone(),
            TrainedModel::Svm(m) => {
                let mut v: Vec<f64> = m.support_vectors.iter().flatten().copied().collect();
                v.extend(&m.alphas);
                v.extend(&m.sv_labels);
                v.push(m.bias);
                v
            }
            TrainedModel::Mlp(m) => m
                .layers
                .iter()
                .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
                .collect(),
        }
    }

    #[test]
    fn round_trip_is_bit_faithful_and_byte_stable() {
        let cfg = TrainConfig::default();
        for model in sample_models() {
            let mut first = Vec::new();
            save_model(&mut first, &model, &cfg).unwrap();
            let reloaded = load_model(first.as_slice()).unwrap();
            let (a, b) = (params(&model), params(&reloaded));
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.to_bits(), y.to_bits(), "{x} vs {y}");
            }
            let doc = read_document(first.as_slice()).unwrap();
            let mut second = Vec::new();
            write_document(&mut second, &doc).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn document_keeps_kind_and_seed() {
        let cfg = TrainConfig {
            seed: 99,
            ..TrainConfig::default()
        };
        let mut buf = Vec::new();
        save_model(&mut buf, &sample_models()[0], &cfg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"kind\":\"logistic\""));
        assert!(text.contains("\"seed\":99"));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let cfg = TrainConfig::default();
        let model = TrainedModel::Logistic(LogisticModel {
            theta: vec![f64::NAN],
            trained_loss: 0.0,
            iterations: 0,
        });
        assert!(save_model(Vec::new(), &model, &cfg).is_err());
    }

    #[test]
    fn seventeen_digit_rendering() {
        let cfg = TrainConfig::default();
        let mut buf = Vec::new();
        save_model(&mut buf, &sample_models()[0], &cfg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("3.3333333333333331e-1"));
    }
}
