//! Exercises the command-line surface: subcommand flow, output formats
//! and exit codes.

mod common;

use std::path::Path;
use std::process::Command;

use common::copy_fixture;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridmt"))
}

fn config_json(dir: &Path, fixture: &common::CopyFixture) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&fixture.config).unwrap()).unwrap();
    path
}

#[test]
fn stage_by_stage_flow_matches_run_all() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = copy_fixture(dir.path(), "out", 3);
    let config = config_json(dir.path(), &fixture);

    for step in [
        "preprocess",
        "train-lm",
        "align",
        "extract-phrases",
        "smt-translate",
        "train-ape",
        "hybrid-translate",
    ] {
        let out = bin()
            .arg(step)
            .arg("--config")
            .arg(&config)
            .arg("--workers")
            .arg("2")
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{step} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let stats = bin()
        .arg("stats")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(stats.status.success());
    let text = String::from_utf8(stats.stdout).unwrap();
    assert!(text.contains("# sentences (src)\t70"), "{text}");
    assert!(text.contains("# vocab (src)\t8"), "{text}");

    let eval = bin()
        .arg("evaluate")
        .arg("--hyp")
        .arg(fixture.config.out("translated.txt"))
        .arg("--ref")
        .arg(dir.path().join("test.ref"))
        .output()
        .unwrap();
    assert!(eval.status.success());
    let table = String::from_utf8(eval.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("BLEU\t"));
    assert!(lines[1].starts_with("BLEU-cased\t"));
    assert!(lines[2].starts_with("TER\t"));
    assert!(lines[3].starts_with("CharacTER\t"));
    for line in lines {
        let score = line.split('\t').nth(1).unwrap();
        assert_eq!(score.split('.').nth(1).unwrap().len(), 4, "{line}");
    }
}

#[test]
fn smt_translate_reads_explicit_input() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = copy_fixture(dir.path(), "out", 4);
    let config = config_json(dir.path(), &fixture);
    for step in ["preprocess", "train-smt"] {
        assert!(bin().arg(step).arg("--config").arg(&config).status().unwrap().success());
    }

    let input = dir.path().join("input.txt");
    std::fs::write(&input, "labas rytas\nmiestas\n").unwrap();
    let out = bin()
        .arg("smt-translate")
        .arg("--config")
        .arg(&config)
        .arg("--input")
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), "labas rytas");
}

#[test]
fn trace_mode_emits_stack_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = copy_fixture(dir.path(), "out", 6);
    let config = config_json(dir.path(), &fixture);
    for step in ["preprocess", "train-smt"] {
        assert!(bin().arg(step).arg("--config").arg(&config).status().unwrap().success());
    }
    let input = dir.path().join("input.txt");
    std::fs::write(&input, "labas rytas\n").unwrap();
    let out = bin()
        .arg("smt-translate")
        .arg("--config")
        .arg(&config)
        .arg("--input")
        .arg(&input)
        .arg("--trace")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let trace_lines: Vec<&str> = stderr.lines().collect();
    assert!(!trace_lines.is_empty());
    // sentence index, cardinality, stack size, best score.
    for line in trace_lines {
        assert_eq!(line.split('\t').count(), 4, "{line}");
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();

    // No config at all.
    let out = bin().arg("run-all").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unknown key.
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"paths": {"train_src": "x", "train_tgt": "y", "out_dir": "z"}, "wrong_key": 1}"#,
    )
    .unwrap();
    let out = bin().arg("run-all").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("wrong_key"), "{stderr}");

    // Any other failure is exit code 1 (here: missing artifacts).
    let fixture = copy_fixture(dir.path(), "out", 7);
    let config = config_json(dir.path(), &fixture);
    let out = bin().arg("stats").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
