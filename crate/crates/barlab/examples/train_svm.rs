//! Train the RBF SVM by sequential minimal optimization on a small
//! two-cluster problem and inspect the solution.
//!
//! Run with: cargo run --example train_svm

use barlab::models::svm::{dual_objective, fit_svm_smo, svm_predict};
use barlab::models::TrainConfig;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> barlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 60;
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label: f64 = if i % 2 == 0 { 1.0 } else { -1.0 };
        x[[i, 0]] = label + 1.4 * (rng.random::<f64>() - 0.5);
        x[[i, 1]] = label + 1.4 * (rng.random::<f64>() - 0.5);
        y.push(label);
    }

    let (gamma, c) = (0.1, 0.8);
    let model = fit_svm_smo(x.view(), &y, gamma, c, &TrainConfig::default())?;
    println!(
        "{} support vectors of {n} samples, bias {:.6}",
        model.alphas.len(),
        model.bias
    );
    println!(
        "converged: {}, max KKT violation {:.3e}",
        model.converged, model.max_kkt_violation
    );
    let balance: f64 = model
        .alphas
        .iter()
        .zip(&model.sv_labels)
        .map(|(a, l)| a * l)
        .sum();
    println!("sum alpha*y = {balance:.3e}");

    let mut full = vec![0.0; n];
    let mut sv = 0;
    for (i, slot) in full.iter_mut().enumerate() {
        if sv < model.alphas.len() && x.row(i).to_vec() == model.support_vectors[sv] {
            *slot = model.alphas[sv];
            sv += 1;
        }
    }
    println!(
        "dual objective {:.6}",
        dual_objective(x.view(), &y, &full, gamma)
    );

    let hits = (0..n)
        .filter(|&i| {
            let signal = svm_predict(&model, x.row(i).as_slice().unwrap()).unwrap();
            (signal == 1) == (y[i] > 0.0)
        })
        .count();
    println!("training accuracy {:.3}", hits as f64 / n as f64);
    Ok(())
}
