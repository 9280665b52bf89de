//! Fit the dense rectifier network on raw change rates with Adam and
//! threshold its regression output into trade signals.
//!
//! Run with: cargo run --example train_mlp

use barlab::data::{build_dataset, SplitMode};
use barlab::models::mlp::{fit_mlp, mlp_forward};
use barlab::models::TrainConfig;
use barlab::synth::synthetic_bars;

fn main() -> barlab::Result<()> {
    let bars = synthetic_bars(13, 260);
    let dataset = build_dataset(&bars, 200, 0.8, SplitMode::Chronological)?;

    let cfg = TrainConfig::for_mlp();
    let model = fit_mlp(dataset.train_features(), dataset.train_raw_change(), &cfg)?;
    println!(
        "layer shapes: {:?}",
        model
            .layers
            .iter()
            .map(|l| l.weights.dim())
            .collect::<Vec<_>>()
    );
    println!("train mse {:.3e}", model.train_loss);
    if let Some(val) = model.validation_loss {
        println!("validation mse {:.3e}", val);
    }

    println!("\nfirst test days: predicted change vs real change -> signal");
    for i in dataset.split_index..(dataset.split_index + 8).min(dataset.rows()) {
        let row = dataset.features.row(i);
        let predicted = mlp_forward(&model, row.as_slice().unwrap())?;
        let signal = u8::from(predicted > 0.0);
        println!(
            "{}  {:+.5} vs {:+.5} -> {}",
            dataset.dates[i], predicted, dataset.raw_change[i], signal
        );
    }
    Ok(())
}
