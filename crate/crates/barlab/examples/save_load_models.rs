//! Persist trained models as JSON and reload them bit-faithfully.
//!
//! Run with: cargo run --example save_load_models

use barlab::data::{build_dataset, SplitMode};
use barlab::models::{load_model, predict_signal, save_model, train, ModelKind, TrainConfig};
use barlab::synth::synthetic_bars;

fn main() -> barlab::Result<()> {
    let bars = synthetic_bars(19, 200);
    let dataset = build_dataset(&bars, 150, 0.8, SplitMode::Chronological)?;
    let dir = std::env::temp_dir().join("barlab_models");
    std::fs::create_dir_all(&dir)?;

    for kind in [ModelKind::Logistic, ModelKind::Svm, ModelKind::Mlp] {
        let mut cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        cfg.learning_rate = TrainConfig::default_learning_rate(kind);
        let model = train(kind, &dataset, &cfg)?;

        let path = dir.join(format!("{kind}.json"));
        save_model(std::fs::File::create(&path)?, &model, &cfg)?;
        let reloaded = load_model(std::fs::File::open(&path)?)?;

        let mut agree = true;
        for i in 0..dataset.rows() {
            let row = dataset.features.row(i);
            let features = row.as_slice().unwrap();
            agree &= predict_signal(&model, features)? == predict_signal(&reloaded, features)?;
        }
        println!(
            "{kind}: wrote {} bytes to {}, reloaded predictions identical: {agree}",
            std::fs::metadata(&path)?.len(),
            path.display()
        );
    }
    Ok(())
}
