//! Train the three-branch model on a small synthetic dataset and inspect
//! one prediction at several removal strengths.
//!
//! Run with: cargo run -p cream --example train_counterfactual

use cream::counterfactual::{branch_logits, predict_scores, EncodedViews};
use cream::synthgen::{generate_dataset, GenSpec};
use cream::train::{train, TrainConfig};
use cream::views::views_for_source;

fn main() {
    let spec = GenSpec { n_train: 400, n_valid: 100, n_test: 100, seed: 3, ..GenSpec::default() };
    let data = generate_dataset(&spec).unwrap();

    let config = TrainConfig { seed: 3, epochs: 4, ..TrainConfig::default() };
    println!(
        "training: {} samples, {} epochs, fusion deferred for the first {:.0}% of iterations",
        data.train.len(),
        config.epochs,
        config.fusion_fraction * 100.0
    );
    let outcome = train(&data.train, &data.valid, &config).unwrap();
    for epoch in &outcome.log {
        println!(
            "  epoch {}: L_f {:.3}  L_r {:.3}  L_t {:.3}  valid acc {:.3}",
            epoch.epoch,
            epoch.mean_l_f,
            epoch.mean_l_r,
            epoch.mean_l_t,
            epoch.valid_accuracy.unwrap_or(f64::NAN)
        );
    }

    let model = outcome.model;
    let sample = &data.test[0];
    println!("\ntest sample (label {}):\n{}", sample.label, sample.code);

    let views = views_for_source(&sample.code, model.config.max_len).unwrap();
    let encoded = EncodedViews::encode(&views, &model.vocab);
    let logits = branch_logits(&model.params, &encoded).unwrap();
    println!("z_f[label] {:.3}  z_k[label] {:.3}  z_t[label] {:.3}",
        logits.z_f[sample.label], logits.z_k[sample.label], logits.z_t[sample.label]);

    for alpha in [0.0, 0.6, 1.0] {
        let z = predict_scores(&model, sample, alpha).unwrap();
        let predicted = cream::counterfactual::argmax(&z);
        println!("alpha {alpha:3}: predicted class {predicted} (score {:.3})", z[predicted]);
    }
}
