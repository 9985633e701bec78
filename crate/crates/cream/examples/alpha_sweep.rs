//! Sweep the removal strength alpha. Accuracy on the renamed test set climbs
//! as more of the naming effect is removed. On the original set the cost of
//! removal depends on how much genuine signal names carry; here test names
//! are decorrelated by construction, so removing them costs almost nothing.
//!
//! Run with: cargo run -p cream --example alpha_sweep

use cream::eval::evaluate;
use cream::rng::STREAM_TRANSFORM;
use cream::synthgen::{generate_dataset, GenSpec};
use cream::train::{train, TrainConfig};
use cream::views::{build_transformed_set, identifier_pool};

fn main() {
    let seed = 13;
    let spec = GenSpec { seed, ..GenSpec::default() };
    let data = generate_dataset(&spec).unwrap();
    let pool = identifier_pool(&data.train).unwrap();
    let transformed = build_transformed_set(&data.test, &pool, seed ^ STREAM_TRANSFORM)
        .unwrap()
        .samples;

    let config = TrainConfig { seed, ..TrainConfig::default() };
    let model = train(&data.train, &data.valid, &config).unwrap().model;

    println!("alpha   acc_original   acc_transformed");
    for step in 0..=10 {
        let alpha = step as f64 / 10.0;
        let original = evaluate(&model, &data.test, alpha, 1).unwrap().accuracy;
        let renamed = evaluate(&model, &transformed, alpha, 1).unwrap().accuracy;
        println!("{alpha:5.1}   {original:12.3}   {renamed:15.3}");
    }
}
