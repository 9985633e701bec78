//! Generate a synthetic dataset with a planted name-label correlation and
//! write it as JSONL, together with the renamed copy of the test split.
//!
//! Run with: cargo run -p cream --example generate_dataset

use cream::dataset::write_jsonl;
use cream::rng::STREAM_TRANSFORM;
use cream::synthgen::{generate_dataset, name_pools, GenSpec};
use cream::views::{build_transformed_set, identifier_pool};

fn main() {
    let spec = GenSpec {
        n_train: 400,
        n_valid: 100,
        n_test: 100,
        seed: 7,
        ..GenSpec::default()
    };
    let data = generate_dataset(&spec).expect("valid spec");

    let pools = name_pools(&spec);
    println!(
        "{} classes, rho = {}, class pools of {} names, global pool of {} names",
        spec.n_classes,
        spec.rho,
        pools.class_pools[0].len(),
        pools.global_pool.len()
    );
    println!("class 0 pool starts with: {:?}", &pools.class_pools[0][..5]);
    println!("\nfirst training sample (label {}):\n{}", data.train[0].label, data.train[0].code);

    let pool = identifier_pool(&data.train).expect("train split lexes");
    let transformed = build_transformed_set(&data.test, &pool, spec.seed ^ STREAM_TRANSFORM)
        .expect("transform succeeds");
    println!("same structure, names randomly substituted:\n{}", transformed.samples[0].code);

    let dir = std::env::temp_dir().join("cream-example-data");
    std::fs::create_dir_all(&dir).unwrap();
    write_jsonl(&dir.join("train.jsonl"), &data.train).unwrap();
    write_jsonl(&dir.join("valid.jsonl"), &data.valid).unwrap();
    write_jsonl(&dir.join("test.jsonl"), &data.test).unwrap();
    write_jsonl(&dir.join("test_transformed.jsonl"), &transformed.samples).unwrap();
    println!("wrote JSONL splits under {}", dir.display());
}
