//! End-to-end tests of the `cream` binary: subcommands, flags, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn cream(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cream"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("exp.conf");
    let text = format!(
        "seed = 11\nn_train = 160\nn_valid = 40\nn_test = 40\nepochs = 2\nembed_dim = 8\nout_dir = out\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");

    let gen = cream(&["gen", "--config", "exp.conf"], dir.path());
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    for name in ["train.jsonl", "valid.jsonl", "test.jsonl", "test_transformed.jsonl", "manifest.json"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }

    let train = cream(&["train", "--config", "exp.conf"], dir.path());
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    assert!(dir.path().join("out/checkpoint.bin").exists());

    let eval = cream(&["eval", "--config", "exp.conf"], dir.path());
    assert!(eval.status.success());
    let stdout = String::from_utf8_lossy(&eval.stdout);
    assert!(stdout.contains("accuracy"), "{stdout}");
    let report = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    for field in ["accuracy", "macro_f1", "per_class_f1", "acc_original", "acc_transformed", "gap", "asr", "config_digest"] {
        assert!(report.contains(field), "report missing {field}");
    }

    let attack = cream(
        &["attack", "--config", "exp.conf", "--workers", "2"],
        dir.path(),
    );
    assert!(attack.status.success(), "{}", String::from_utf8_lossy(&attack.stderr));
    assert!(dir.path().join("out/attack.json").exists());
}

#[test]
fn sweep_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "alpha_sweep = 0.0,0.8\nfusion_sweep = 0.1\n");
    assert!(cream(&["gen", "--config", "exp.conf"], dir.path()).status.success());
    let sweep = cream(&["sweep", "--config", "exp.conf"], dir.path());
    assert!(sweep.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,fusion_fraction,acc_original,acc_transformed");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn seed_flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    assert!(cream(&["gen", "--config", "exp.conf", "--seed", "99", "--out", "out99"], dir.path())
        .status
        .success());
    assert!(cream(&["gen", "--config", "exp.conf", "--out", "out11"], dir.path())
        .status
        .success());
    let a = std::fs::read(dir.path().join("out99/train.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("out11/train.jsonl")).unwrap();
    assert_ne!(a, b, "different seeds must generate different data");
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cream(&["gen"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "seed = 1\nrho = 1.5\n").unwrap();
    let out = cream(&["gen", "--config", "bad.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "seed = 1\nrho_typo = 0.5\n").unwrap();
    let out = cream(&["gen", "--config", "bad.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho_typo"));
}

#[test]
fn missing_datasets_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let out = cream(&["train", "--config", "exp.conf"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_config_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = cream(&["gen", "--config", "nope.conf"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    for out_dir in ["a", "b"] {
        assert!(cream(&["gen", "--config", "exp.conf", "--out", out_dir], dir.path())
            .status
            .success());
        assert!(cream(&["train", "--config", "exp.conf", "--out", out_dir], dir.path())
            .status
            .success());
    }
    for name in ["train.jsonl", "manifest.json", "checkpoint.bin", "train_log.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}
