//! Fully connected regression network: rectifier hidden layers, a linear
//! scalar head, mean-squared-error loss and minibatch Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::TrainConfig;

pub const HIDDEN_WIDTH: usize = 64;
pub const MINIBATCH: usize = 32;

/// One dense layer; `weights` is (outputs x inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Rectifier network with a linear scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }
}

/// Forward pass for a single feature vector; hidden layers are rectified,
/// the final layer is linear.
pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::Shape(format!(
            "network expects {} inputs, got {}",
            model.input_dim(),
            x.len()
        )));
    }
    let mut activation = Array1::from(x.to_vec());
    let last = model.layers.len() - 1;
    for (index, layer) in model.layers.iter().enumerate() {
        let mut z = layer.weights.dot(&activation) + &layer.bias;
        if index < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activation = z;
    }
    Ok(activation[0])
}

fn check_batch(model: &MlpModel, x: &ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "features have {} rows, targets have {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "network expects {} inputs, got {}",
            model.input_dim(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Activations after each layer for a batch; index 0 is the input.
fn forward_batch(layers: &[Layer], x: &ArrayView2<f64>) -> Vec<Array2<f64>> {
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(x.to_owned());
    let last = layers.len() - 1;
    for (index, layer) in layers.iter().enumerate() {
        let mut z = activations[index].dot(&layer.weights.t());
        z += &layer.bias;
        if index < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    activations
}

/// Mean squared error of the network on a batch.
pub fn mlp_mse(model: &MlpModel, x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
    check_batch(model, &x, y)?;
    let activations = forward_batch(&model.layers, &x);
    let preds = activations.last().expect("non-empty activations");
    let m = y.len() as f64;
    Ok(y.iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = preds[[i, 0]] - t;
            d * d
        })
        .sum::<f64>()
        / m)
}

/// Mean squared error and its gradient with respect to every layer
/// parameter, via backpropagation. Gradient layers mirror the model shapes.
pub fn mlp_loss_and_gradients(
    model: &MlpModel,
    x: ArrayView2<f64>,
    y: &[f64],
) -> Result<(f64, Vec<Layer>)> {
    check_batch(model, &x, y)?;
    let layers = &model.layers;
    let activations = forward_batch(layers, &x);
    let preds = activations.last().expect("non-empty activations");
    let m = y.len() as f64;

    let mut loss = 0.0;
    let mut dz = Array2::zeros((y.len(), 1));
    for (i, &t) in y.iter().enumerate() {
        let d = preds[[i, 0]] - t;
        loss += d * d;
        dz[[i, 0]] = 2.0 * d / m;
    }
    loss /= m;

    let mut grads: Vec<Layer> = Vec::with_capacity(layers.len());
    for index in (0..layers.len()).rev() {
        let input = &activations[index];
        let grad_w = dz.t().dot(input);
        let grad_b = dz.sum_axis(Axis(0));
        if index > 0 {
            let mut upstream = dz.dot(&layers[index].weights);
            // rectifier gate: the stored activation is positive iff the
            // pre-activation was positive
            upstream.zip_mut_with(&activations[index], |u, &a| {
                if a <= 0.0 {
                    *u = 0.0;
                }
            });
            dz = upstream;
        }
        grads.push(Layer {
            weights: grad_w,
            bias: grad_b,
        });
    }
    grads.reverse();
    Ok((loss, grads))
}

fn init_layers(sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Layer> {
    use rand::Rng;
    sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut weights = Array2::zeros((fan_out, fan_in));
            for o in 0..fan_out {
                for i in 0..fan_in {
                    weights[[o, i]] = (rng.random::<f64>() * 2.0 - 1.0) * r;
                }
            }
            Layer {
                weights,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect()
}

struct AdamState {
    m: Vec<Layer>,
    v: Vec<Layer>,
    step: usize,
}

impl AdamState {
    fn new(layers: &[Layer]) -> Self {
        let zeros = layers
            .iter()
            .map(|l| Layer {
                weights: Array2::zeros(l.weights.dim()),
                bias: Array1::zeros(l.bias.len()),
            })
            .collect::<Vec<_>>();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, layers: &mut [Layer], grads: &[Layer], cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - cfg.adam_beta1.powi(t);
        let bias2 = 1.0 - cfg.adam_beta2.powi(t);
        for (i, grad) in grads.iter().enumerate() {
            apply_adam(
                self.m[i].weights.iter_mut(),
                self.v[i].weights.iter_mut(),
                layers[i].weights.iter_mut(),
                grad.weights.iter(),
                cfg,
                bias1,
                bias2,
            );
            apply_adam(
                self.m[i].bias.iter_mut(),
                self.v[i].bias.iter_mut(),
                layers[i].bias.iter_mut(),
                grad.bias.iter(),
                cfg,
                bias1,
                bias2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_adam<'a>(
    m: impl Iterator<Item = &'a mut f64>,
    v: impl Iterator<Item = &'a mut f64>,
    param: impl Iterator<Item = &'a mut f64>,
    grad: impl Iterator<Item = &'a f64>,
    cfg: &TrainConfig,
    bias1: f64,
    bias2: f64,
) {
    for (((m, v), p), &g) in m.zip(v).zip(param).zip(grad) {
        *m = cfg.adam_beta1 * *m + (1.0 - cfg.adam_beta1) * g;
        *v = cfg.adam_beta2 * *v + (1.0 - cfg.adam_beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

/// Train the dense network on raw change-rate targets with minibatch Adam.
///
/// The last `cfg.validation_fraction` of the rows is held out and only
/// reported as `validation_loss`. Training is deterministic for a given
/// seed: initialization and the per-epoch shuffles all come from one
/// seeded generator.
pub fn fit_mlp(x: ArrayView2<f64>, y_change: &[f64], cfg: &TrainConfig) -> Result<MlpModel> {
    fit_mlp_with_hidden(x, y_change, cfg, &[HIDDEN_WIDTH, HIDDEN_WIDTH])
}

/// Same as [`fit_mlp`] with explicit hidden-layer widths.
pub fn fit_mlp_with_hidden(
    x: ArrayView2<f64>,
    y_change: &[f64],
    cfg: &TrainConfig,
    hidden: &[usize],
) -> Result<MlpModel> {
    if x.nrows() < 2 || x.nrows() != y_change.len() {
        return Err(Error::Shape(format!(
            "features have {} rows, targets have {}",
            x.nrows(),
            y_change.len()
        )));
    }
    cfg.validate()?;
    let rows = x.nrows();
    let train_rows = ((1.0 - cfg.validation_fraction) * rows as f64).floor() as usize;
    if train_rows == 0 {
        return Err(Error::Domain(format!(
            "validation fraction {} leaves no training rows",
            cfg.validation_fraction
        )));
    }

    let mut sizes = vec![x.ncols()];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut layers = init_layers(&sizes, &mut rng);
    let mut adam = AdamState::new(&layers);

    let mut indices: Vec<usize> = (0..train_rows).collect();
    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(MINIBATCH) {
            let batch_x = x.select(Axis(0), chunk);
            let batch_y: Vec<f64> = chunk.iter().map(|&i| y_change[i]).collect();
            let model = MlpModel {
                layers,
                train_loss: 0.0,
                validation_loss: None,
            };
            let (loss, grads) = mlp_loss_and_gradients(&model, batch_x.view(), &batch_y)?;
            layers = model.layers;
            if !loss.is_finite() {
                return Err(Error::Divergence(epoch));
            }
            adam.update(&mut layers, &grads, cfg);
        }
    }

    let mut model = MlpModel {
        layers,
        train_loss: 0.0,
        validation_loss: None,
    };
    let train_x = x.slice(ndarray::s![..train_rows, ..]);
    model.train_loss = mlp_mse(&model, train_x, &y_change[..train_rows])?;
    if train_rows < rows {
        let val_x = x.slice(ndarray::s![train_rows.., ..]);
        model.validation_loss = Some(mlp_mse(&model, val_x, &y_change[train_rows..])?);
    }
    Ok(model)
}
