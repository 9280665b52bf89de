//! Binary logistic regression with cross-entropy loss, trained either by
//! plain gradient descent or by BFGS with backtracking line search.

use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};
use crate::models::bfgs::minimize_bfgs;
use crate::models::TrainConfig;

/// Logistic sigmoid, clamped into (1e-12, 1 - 1e-12) so loss terms stay finite.
pub fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(1e-12, 1.0 - 1e-12)
}

/// Mean binary cross-entropy of probabilities against {0,1} labels.
pub fn cross_entropy(y: &[u8], y_hat: &[f64]) -> Result<f64> {
    if y.is_empty() || y.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "cross entropy needs equal non-empty label and prediction lengths, got {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    let mut sum = 0.0;
    for (&label, &p) in y.iter().zip(y_hat) {
        sum += if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(-sum / y.len() as f64)
}

/// Trained logistic classifier; the bias is the final entry of `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub theta: Vec<f64>,
    pub trained_loss: f64,
    pub iterations: usize,
}

impl LogisticModel {
    /// Probability of label 1 for one feature vector.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.theta.len() {
            return Err(Error::Shape(format!(
                "model has {} features, input has {}",
                self.theta.len() - 1,
                x.len()
            )));
        }
        let z = x.iter().zip(&self.theta).map(|(a, b)| a * b).sum::<f64>()
            + self.theta[self.theta.len() - 1];
        Ok(sigmoid(z))
    }

    /// Signal 1 when the probability exceeds 0.5; the boundary maps to 0.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.probability(x)? > 0.5))
    }
}

fn check_training_inputs(x: &ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "features have {} rows, labels have {}",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Cross-entropy and its gradient at `theta` (bias appended as last entry).
fn loss_and_grad(theta: &[f64], x: &ArrayView2<f64>, y: &[u8]) -> (f64, Vec<f64>) {
    let (m, p) = (x.nrows(), x.ncols());
    let inv_m = 1.0 / m as f64;
    let bias = theta[p];
    let mut loss = 0.0;
    let mut grad = vec![0.0; p + 1];
    for (i, &label) in y.iter().enumerate().take(m) {
        let row = x.row(i);
        let z = row.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + bias;
        let h = sigmoid(z);
        loss += if label == 1 { h.ln() } else { (1.0 - h).ln() };
        let residual = h - f64::from(label);
        for (g, v) in grad[..p].iter_mut().zip(row) {
            *g += residual * v;
        }
        grad[p] += residual;
    }
    for g in &mut grad {
        *g *= inv_m;
    }
    (-loss * inv_m, grad)
}

/// Gradient of the mean cross-entropy: (1/m) X'(h - y), bias column appended.
pub fn logistic_grad(theta: &[f64], x: ArrayView2<f64>, y: &[u8]) -> Result<Vec<f64>> {
    check_training_inputs(&x, y)?;
    if theta.len() != x.ncols() + 1 {
        return Err(Error::Shape(format!(
            "theta has {} entries, expected {}",
            theta.len(),
            x.ncols() + 1
        )));
    }
    Ok(loss_and_grad(theta, &x, y).1)
}

/// Gradient descent from zero weights; stops when the parameter step norm
/// falls below `cfg.epsilon` or after `cfg.max_iters` updates.
pub fn fit_logistic_gd(x: ArrayView2<f64>, y: &[u8], cfg: &TrainConfig) -> Result<LogisticModel> {
    check_training_inputs(&x, y)?;
    cfg.validate()?;
    let p = x.ncols() + 1;
    let mut theta = vec![0.0; p];
    let mut iterations = 0;
    for iter in 0..cfg.max_iters {
        let (loss, grad) = loss_and_grad(&theta, &x, y);
        if !loss.is_finite() {
            return Err(Error::Divergence(iter));
        }
        let mut step_sq = 0.0;
        for (t, g) in theta.iter_mut().zip(&grad) {
            let dt = cfg.learning_rate * g;
            *t -= dt;
            step_sq += dt * dt;
        }
        iterations = iter + 1;
        if step_sq.sqrt() < cfg.epsilon {
            break;
        }
    }
    let trained_loss = loss_and_grad(&theta, &x, y).0;
    Ok(LogisticModel {
        theta,
        trained_loss,
        iterations,
    })
}

/// BFGS from zero weights; stops when the gradient norm falls below
/// `cfg.epsilon` or after `cfg.max_iters` iterations.
pub fn fit_logistic_bfgs(x: ArrayView2<f64>, y: &[u8], cfg: &TrainConfig) -> Result<LogisticModel> {
    check_training_inputs(&x, y)?;
    cfg.validate()?;
    let p = x.ncols() + 1;
    let objective = |theta: &Array1<f64>| {
        let (loss, grad) = loss_and_grad(theta.as_slice().expect("contiguous theta"), &x, y);
        (loss, Array1::from(grad))
    };
    let solution = minimize_bfgs(objective, Array1::zeros(p), cfg.epsilon, cfg.max_iters)?;
    Ok(LogisticModel {
        theta: solution.x.to_vec(),
        trained_loss: solution.value,
        iterations: solution.iterations,
    })
}
