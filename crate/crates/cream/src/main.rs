use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cream::cli::{self, CliError};
use cream::config::ExperimentConfig;

/// Counterfactual identifier-debiasing experiments.
#[derive(Parser)]
#[command(name = "cream", version, about)]
struct Args {
    /// Experiment config file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation and attack.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/valid/test splits plus the renamed test set.
    Gen,
    /// Train a model on the generated splits and save a checkpoint.
    Train,
    /// Evaluate the checkpoint on the original and renamed test sets.
    Eval,
    /// Evaluate an alpha / fusion-fraction grid.
    Sweep,
    /// Run the greedy identifier-substitution attack.
    Attack,
}

fn resolve_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let (mut config, seed_in_file) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let config = ExperimentConfig::parse(&text)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let seed_in_file = text.lines().any(|l| {
                let l = l.trim();
                !l.starts_with('#') && l.split_once('=').map(|(k, _)| k.trim()) == Some("seed")
            });
            (config, seed_in_file)
        }
        None => (ExperimentConfig::default(), false),
    };
    match args.seed {
        Some(seed) => config.set_seed(seed),
        None if !seed_in_file => {
            return Err(CliError::Validation(
                "seed required: set `seed =` in the config file or pass --seed".to_string(),
            ))
        }
        None => {}
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run(args: &Args) -> Result<(), CliError> {
    let config = resolve_config(args)?;
    match args.command {
        Command::Gen => cli::cmd_gen(&config)?,
        Command::Train => {
            cli::cmd_train(&config)?;
        }
        Command::Eval => {
            let report = cli::cmd_eval(&config)?;
            println!(
                "accuracy {:.4}  macro_f1 {:.4}  acc_original {:.4}  acc_transformed {:.4}  gap {:.4}",
                report.accuracy,
                report.macro_f1,
                report.acc_original,
                report.acc_transformed,
                report.gap
            );
        }
        Command::Sweep => {
            let rows = cli::cmd_sweep(&config)?;
            for row in rows {
                println!(
                    "alpha {:.2}  fusion {:.2}  acc_original {:.4}  acc_transformed {:.4}",
                    row.alpha, row.fusion_fraction, row.acc_original, row.acc_transformed
                );
            }
        }
        Command::Attack => {
            let result = cli::cmd_attack(&config)?;
            match result.asr {
                Some(asr) => println!(
                    "attacked {}  flipped {}  asr {:.4}",
                    result.n_attacked, result.n_flipped, asr
                ),
                None => println!("attacked 0  asr undefined"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
