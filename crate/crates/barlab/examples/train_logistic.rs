//! Train the logistic classifier two ways on the same window: plain
//! gradient descent and BFGS, then compare losses and iteration counts.
//!
//! Run with: cargo run --example train_logistic

use barlab::data::{build_dataset, SplitMode};
use barlab::models::logistic::{fit_logistic_bfgs, fit_logistic_gd};
use barlab::models::TrainConfig;
use barlab::report::accuracy;
use barlab::synth::synthetic_bars;

fn main() -> barlab::Result<()> {
    let bars = synthetic_bars(7, 300);
    let dataset = build_dataset(&bars, 250, 0.8, SplitMode::Chronological)?;
    println!(
        "dataset: {} rows, {} features, split at {}",
        dataset.rows(),
        dataset.features.ncols(),
        dataset.split_index
    );

    let cfg = TrainConfig {
        max_iters: 50_000,
        ..TrainConfig::default()
    };
    let gd = fit_logistic_gd(dataset.train_features(), dataset.train_labels(), &cfg)?;
    let bfgs = fit_logistic_bfgs(dataset.train_features(), dataset.train_labels(), &cfg)?;
    println!(
        "gd:   loss {:.8} after {} iterations",
        gd.trained_loss, gd.iterations
    );
    println!(
        "bfgs: loss {:.8} after {} iterations",
        bfgs.trained_loss, bfgs.iterations
    );

    for (name, model) in [("gd", &gd), ("bfgs", &bfgs)] {
        let predict = |rows: std::ops::Range<usize>| -> barlab::Result<Vec<u8>> {
            rows.map(|i| model.predict(dataset.features.row(i).as_slice().unwrap()))
                .collect()
        };
        let train_pred = predict(0..dataset.split_index)?;
        let test_pred = predict(dataset.split_index..dataset.rows())?;
        println!(
            "{name}: train accuracy {:.4}, test accuracy {:.4}",
            accuracy(dataset.train_labels(), &train_pred)?,
            accuracy(dataset.test_labels(), &test_pred)?
        );
    }
    Ok(())
}
