//! The full reproducible pipeline through the command layer, equivalent to
//! running the `cream` binary: gen, train, eval, attack.
//!
//! Run with: cargo run -p cream --example experiment_pipeline

use cream::cli::{cmd_attack, cmd_eval, cmd_gen, cmd_train};
use cream::config::ExperimentConfig;

fn main() {
    let mut config = ExperimentConfig::default();
    config.set_seed(42);
    config.gen.n_train = 800;
    config.gen.n_valid = 200;
    config.gen.n_test = 200;
    config.workers = 2;
    config.out_dir = std::env::temp_dir().join("cream-example-pipeline");

    println!("artifacts -> {}", config.out_dir.display());
    println!("config digest: {}", config.digest());

    cmd_gen(&config).expect("gen");
    println!("\ngenerated train/valid/test plus the renamed test set");

    cmd_train(&config).expect("train");
    let log = std::fs::read_to_string(config.out_dir.join("train_log.csv")).unwrap();
    println!("\ntraining log:\n{log}");

    let report = cmd_eval(&config).expect("eval");
    println!(
        "accuracy {:.3}  macro_f1 {:.3}  acc_original {:.3}  acc_transformed {:.3}  gap {:.3}",
        report.accuracy, report.macro_f1, report.acc_original, report.acc_transformed, report.gap
    );

    let attack = cmd_attack(&config).expect("attack");
    println!(
        "attack: {} of {} flipped, asr {:?}",
        attack.n_flipped, attack.n_attacked, attack.asr
    );
}
