//! Soft-margin RBF support vector machine trained by sequential minimal
//! optimization: pairwise multiplier updates with KKT-violation selection,
//! a cached error vector and a precomputed kernel matrix.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::TrainConfig;

/// Minimal multiplier progress accepted by a pair step.
const SMO_EPS: f64 = 1e-12;

/// Gaussian kernel exp(-gamma * |x1 - x2|^2).
pub fn rbf_kernel(x1: &[f64], x2: &[f64], gamma: f64) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::Shape(format!(
            "kernel inputs of dimension {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    Ok(rbf_unchecked(x1, x2, gamma))
}

fn rbf_unchecked(x1: &[f64], x2: &[f64], gamma: f64) -> f64 {
    let sq = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    (-gamma * sq).exp()
}

/// Trained soft-margin classifier: support vectors and their multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// Labels of the support vectors, each -1 or +1.
    pub sv_labels: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Largest complementarity violation measured at exit.
    pub max_kkt_violation: f64,
    pub converged: bool,
}

impl SvmModel {
    /// Raw decision value sum(alpha_i y_i k(x_i, x)) + b.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let mut sum = self.bias;
        for ((sv, &alpha), &label) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.sv_labels)
        {
            sum += alpha * label * rbf_kernel(sv, x, self.gamma)?;
        }
        Ok(sum)
    }
}

/// Signal 1 for a positive decision value; ties map to 0.
pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(model.decision_value(x)? > 0.0))
}

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
pub fn dual_objective(x: ArrayView2<f64>, y: &[f64], alphas: &[f64], gamma: f64) -> f64 {
    let n = x.nrows();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let xi = x.row(i);
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            let k = rbf_unchecked(
                xi.as_slice().expect("contiguous row"),
                x.row(j).as_slice().expect("contiguous row"),
                gamma,
            );
            quad += alphas[i] * alphas[j] * y[i] * y[j] * k;
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Pairwise optimizer state. `f[i]` caches the bias-free prediction error
/// u_i - y_i with u_i = sum_j alpha_j y_j K_ij; the bias never enters the
/// pair updates (it cancels out of E1 - E2), so optimality is tracked with
/// the two-threshold bounds instead of a running bias, which stays sound
/// when no free support vector exists.
struct Smo<'a> {
    gram: &'a Array2<f64>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    f: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Smo<'_> {
    fn non_bound(&self, i: usize) -> bool {
        self.alphas[i] > 0.0 && self.alphas[i] < self.c
    }

    /// Samples whose KKT condition reads b >= -f[i].
    fn constrains_below(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alphas[i] < self.c) || (self.y[i] < 0.0 && self.alphas[i] > 0.0)
    }

    /// Samples whose KKT condition reads b <= -f[i].
    fn constrains_above(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alphas[i] > 0.0) || (self.y[i] < 0.0 && self.alphas[i] < self.c)
    }

    /// Tightest (largest lower, smallest upper) bias bounds. Both sets are
    /// non-empty whenever both classes are present and sum(alpha*y) = 0.
    fn bias_bounds(&self) -> (f64, f64) {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..self.y.len() {
            let candidate = -self.f[i];
            if self.constrains_below(i) {
                lower = lower.max(candidate);
            }
            if self.constrains_above(i) {
                upper = upper.min(candidate);
            }
        }
        (lower, upper)
    }

    /// Second-multiplier heuristic: the non-bound sample with the largest
    /// |E1 - E2|, ties broken by the smaller index.
    fn second_choice(&self, f2: f64, skip: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.y.len() {
            if i == skip || !self.non_bound(i) {
                continue;
            }
            let gap = (f2 - self.f[i]).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
        best.map(|(i, _)| i)
    }

    fn examine(&mut self, i2: usize) -> bool {
        let n = self.y.len();
        let (lower, upper) = self.bias_bounds();
        let candidate = -self.f[i2];
        let violates = (self.constrains_below(i2) && candidate > upper + 2.0 * self.tol)
            || (self.constrains_above(i2) && candidate < lower - 2.0 * self.tol);
        if !violates {
            return false;
        }
        if let Some(i1) = self.second_choice(self.f[i2], i2) {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..n);
        for offset in 0..n {
            let i1 = (start + offset) % n;
            if self.non_bound(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..n);
        for offset in 0..n {
            let i1 = (start + offset) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            (
                (a2_old - a1_old).max(0.0),
                (self.c + a2_old - a1_old).min(self.c),
            )
        } else {
            (
                (a1_old + a2_old - self.c).max(0.0),
                (a1_old + a2_old).min(self.c),
            )
        };
        if lo >= hi {
            return false;
        }
        let k11 = self.gram[[i1, i1]];
        let k12 = self.gram[[i1, i2]];
        let k22 = self.gram[[i2, i2]];
        let eta = k11 + k22 - 2.0 * k12;
        // slope of the pair objective in a2 at the current point
        let slope = y2 * (self.f[i1] - self.f[i2]);
        let a2 = if eta > 0.0 {
            (a2_old + slope / eta).clamp(lo, hi)
        } else {
            // duplicate points make the pair direction flat; follow the sign
            if slope > SMO_EPS {
                hi
            } else if slope < -SMO_EPS {
                lo
            } else {
                return false;
            }
        };
        // snap to the box: a multiplier left one ulp inside a bound would be
        // misclassified as free and wedge the bias bounds
        let band = 1e-12 * self.c;
        let snap = |v: f64| {
            if v < band {
                0.0
            } else if v > self.c - band {
                self.c
            } else {
                v
            }
        };
        let a2 = snap(a2);
        if (a2 - a2_old).abs() < SMO_EPS * (a2 + a2_old + SMO_EPS) {
            return false;
        }
        let a1 = snap((a1_old + s * (a2_old - a2)).clamp(0.0, self.c));
        self.alphas[i1] = a1;
        self.alphas[i2] = a2;

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        for k in 0..self.y.len() {
            self.f[k] += d1 * self.gram[[i1, k]] + d2 * self.gram[[i2, k]];
        }
        true
    }
}

/// Train a soft-margin RBF SVM by SMO on labels in {-1, +1}.
///
/// At exit every sample satisfies the KKT conditions within `cfg.smo_tol`
/// (the optimizer works at half that tolerance because re-averaging the bias
/// over free support vectors can double the measured violation). Failure to
/// converge within `cfg.smo_max_passes` full passes is reported through
/// `converged` and `max_kkt_violation`, not as an error.
pub fn fit_svm_smo(
    x: ArrayView2<f64>,
    y: &[f64],
    gamma: f64,
    c: f64,
    cfg: &TrainConfig,
) -> Result<SvmModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "features have {n} rows, labels have {}",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!(
            "svm training needs at least 2 samples, got {n}"
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Domain("svm labels must be -1 or +1".into()));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::DegenerateLabels);
    }
    if gamma.is_nan() || gamma <= 0.0 || c.is_nan() || c <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma and C must be positive, got gamma={gamma} C={c}"
        )));
    }

    let mut gram = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        let xi = xi.as_slice().expect("contiguous row");
        for j in 0..=i {
            let xj = x.row(j);
            let k = rbf_unchecked(xi, xj.as_slice().expect("contiguous row"), gamma);
            gram[[i, j]] = k;
            gram[[j, i]] = k;
        }
    }

    let mut smo = Smo {
        gram: &gram,
        y,
        c,
        tol: 0.5 * cfg.smo_tol,
        alphas: vec![0.0; n],
        f: y.iter().map(|&v| -v).collect(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };

    let mut examine_all = true;
    let mut passes = 0usize;
    let mut converged = false;
    loop {
        let mut changed = 0usize;
        if examine_all {
            passes += 1;
            for i in 0..n {
                changed += usize::from(smo.examine(i));
            }
        } else {
            for i in 0..n {
                if smo.non_bound(i) {
                    changed += usize::from(smo.examine(i));
                }
            }
        }
        if examine_all {
            if changed == 0 {
                converged = true;
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
        if passes >= cfg.smo_max_passes {
            break;
        }
    }

    let alphas = smo.alphas;
    let weighted =
        |i: usize| -> f64 { (0..n).map(|j| alphas[j] * y[j] * gram[[j, i]]).sum::<f64>() };
    let free: Vec<usize> = (0..n)
        .filter(|&i| alphas[i] > 0.0 && alphas[i] < c)
        .collect();
    let bias = if free.is_empty() {
        // no free support vector: center the bias in its feasible interval
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..n {
            let candidate = y[i] - weighted(i);
            if (y[i] > 0.0 && alphas[i] < c) || (y[i] < 0.0 && alphas[i] > 0.0) {
                lower = lower.max(candidate);
            }
            if (y[i] > 0.0 && alphas[i] > 0.0) || (y[i] < 0.0 && alphas[i] < c) {
                upper = upper.min(candidate);
            }
        }
        0.5 * (lower + upper)
    } else {
        free.iter().map(|&i| y[i] - weighted(i)).sum::<f64>() / free.len() as f64
    };

    let mut max_kkt_violation: f64 = 0.0;
    for i in 0..n {
        let margin = y[i] * (weighted(i) + bias) - 1.0;
        let violation = if alphas[i] <= 0.0 {
            (-margin).max(0.0)
        } else if alphas[i] >= c {
            margin.max(0.0)
        } else {
            margin.abs()
        };
        max_kkt_violation = max_kkt_violation.max(violation);
    }
    let converged = converged && max_kkt_violation <= cfg.smo_tol;

    let mut support_vectors = Vec::new();
    let mut sv_alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for i in 0..n {
        if alphas[i] > 0.0 {
            support_vectors.push(x.row(i).to_vec());
            sv_alphas.push(alphas[i]);
            sv_labels.push(y[i]);
        }
    }

    Ok(SvmModel {
        support_vectors,
        alphas: sv_alphas,
        sv_labels,
        bias,
        gamma,
        c,
        max_kkt_violation,
        converged,
    })
}
