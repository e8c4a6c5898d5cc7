use super::*;
use crate::text::Token;

fn toy_config(dir: &Path) -> PipelineConfig {
    let json = serde_json::json!({
        "paths": {
            "train_src": dir.join("train.src"),
            "train_tgt": dir.join("train.tgt"),
            "out_dir": dir.join("out"),
        },
        "smt_train_count": 3,
        "ape_train_count": 2,
    });
    serde_json::from_value(json).unwrap()
}

#[test]
fn config_rejects_unknown_keys() {
    let json = r#"{
        "paths": {"train_src": "a", "train_tgt": "b", "out_dir": "c"},
        "smt_train_count": 1,
        "not_a_field": 3
    }"#;
    let parsed: std::result::Result<PipelineConfig, _> = serde_json::from_str(json);
    assert!(parsed.is_err());

    let nested = r#"{
        "paths": {"train_src": "a", "train_tgt": "b", "out_dir": "c", "typo": "x"}
    }"#;
    let parsed: std::result::Result<PipelineConfig, _> = serde_json::from_str(nested);
    assert!(parsed.is_err());
}

#[test]
fn config_defaults_follow_the_architecture() {
    let json = r#"{"paths": {"train_src": "a", "train_tgt": "b", "out_dir": "c"}}"#;
    let config: PipelineConfig = serde_json::from_str(json).unwrap();
    assert_eq!(config.smt_train_count, 762_022);
    assert_eq!(config.ape_train_count, 200_000);
    assert_eq!(config.lm_order, 7);
    assert_eq!(config.max_phrase_len, 7);
    assert_eq!(config.em_iterations, 5);
    assert_eq!(config.clean_max_len, 80);
    assert_eq!(config.decoder.stack_size, 100);
    assert_eq!(config.decoder.distortion_limit, 6);
}

#[test]
fn split_is_contiguous_and_checks_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.smt_train_count = 7;
    config.ape_train_count = 3;
    let pairs: Vec<(Sentence, Sentence)> = (0..10)
        .map(|i| {
            let s = Sentence::from_line(&format!("s{i}"));
            (s.clone(), s)
        })
        .collect();
    let corpus = ParallelCorpus::new(pairs);
    let (smt, ape) = split(&corpus, &config).unwrap();
    assert_eq!(smt.len(), 7);
    assert_eq!(ape.len(), 3);
    assert_eq!(smt.pairs[0].0.tokens[0], Token::new("s0").unwrap());
    assert_eq!(ape.pairs[0].0.tokens[0], Token::new("s7").unwrap());

    config.ape_train_count = 4;
    let err = split(&corpus, &config).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('7') && msg.contains('4'), "{msg}");
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn preprocess_cleans_then_truecases() {
    let dir = tempfile::tempdir().unwrap();
    let long_line: String = vec!["w"; 90].join(" ");
    std::fs::write(
        dir.path().join("train.src"),
        format!("Labas rytas\n{long_line}\nLabas vakaras\nLabas dar\nLabas vel\n"),
    )
    .unwrap();
    std::fs::write(
        dir.path().join("train.tgt"),
        "Good morning\nshort\nGood evening\nGood again\nGood more\n",
    )
    .unwrap();
    let config = toy_config(dir.path());
    let prepared = preprocess(&config).unwrap();
    // The 90-token pair is dropped.
    assert_eq!(prepared.corpus.len(), 4);
    // "Labas" appears only sentence-initially, so it lowercases; "Good"
    // likewise. Mid-sentence tokens keep their form.
    let first = &prepared.corpus.pairs[0];
    assert_eq!(first.0.surfaces(), vec!["labas", "rytas"]);
    assert_eq!(first.1.surfaces(), vec!["good", "morning"]);
    assert_eq!(prepared.stats.src_sentences, 4);
}

#[test]
fn preprocess_rejects_ragged_corpus() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("train.src"), "a\nb\n").unwrap();
    std::fs::write(dir.path().join("train.tgt"), "x\n").unwrap();
    let config = toy_config(dir.path());
    assert!(matches!(preprocess(&config), Err(Error::Config(_))));
}

#[test]
fn prepared_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("train.src"), "Labas rytas\nLabas\nRytas geras\n").unwrap();
    std::fs::write(dir.path().join("train.tgt"), "Good morning\nHello\nMorning good\n").unwrap();
    let config = toy_config(dir.path());
    let prepared = preprocess(&config).unwrap();
    write_prepared(&config, &prepared).unwrap();
    let back = load_prepared(&config, "test").unwrap();
    assert_eq!(back.corpus, prepared.corpus);
    assert_eq!(back.truecase_src, prepared.truecase_src);
    assert_eq!(back.truecase_tgt, prepared.truecase_tgt);
}

#[test]
fn missing_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path());
    let err = load_lm(&config, "smt-translate").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("smt-translate"), "{msg}");
    assert!(msg.contains("lm.arpa"), "{msg}");
}

#[test]
fn evaluate_requires_equal_line_counts() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.txt");
    let reference = dir.path().join("ref.txt");
    std::fs::write(&hyp, "a b\nc\n").unwrap();
    std::fs::write(&reference, "a b\n").unwrap();
    let err = evaluate(&hyp, &reference).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('2') && msg.contains('1'), "{msg}");
}

#[test]
fn evaluate_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.txt");
    let reference = dir.path().join("ref.txt");
    std::fs::write(&hyp, "the cat sat\na dog ran\n").unwrap();
    std::fs::write(&reference, "the cat sat\na dog ran\n").unwrap();
    let m = evaluate(&hyp, &reference).unwrap();
    assert!((m.bleu - 100.0).abs() < 1e-9);
    assert!((m.bleu_cased - 100.0).abs() < 1e-9);
    assert_eq!(m.ter, 0.0);
    assert_eq!(m.character, 0.0);
    let table = m.table();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "BLEU\t100.0000");
    assert_eq!(lines[1], "BLEU-cased\t100.0000");
    assert_eq!(lines[2], "TER\t0.0000");
    assert_eq!(lines[3], "CharacTER\t0.0000");
}

#[test]
fn report_rejects_duplicate_stage() {
    let mut report = RunReport::default();
    report.add_stage("align", 0.5).unwrap();
    assert!(report.add_stage("align", 0.7).is_err());
    let back = RunReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn train_ape_rejects_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path());
    let a = vec![Sentence::from_line("x")];
    let err = train_ape(&a, &[], &config).unwrap_err();
    assert!(err.to_string().contains("train-ape"), "{err}");
}

#[test]
fn pipeline_seed_drives_ape_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.ape.d = 8;
    config.ape.epochs = 2;
    config.ape.batch_size = 2;
    let outputs: Vec<Sentence> = ["a b", "b a", "a a"]
        .iter()
        .map(|l| Sentence::from_line(l))
        .collect();
    let gold = outputs.clone();

    config.seed = 1;
    let (ape1, _) = train_ape(&outputs, &gold, &config).unwrap();
    let (ape1_again, _) = train_ape(&outputs, &gold, &config).unwrap();
    assert_eq!(ape1.params, ape1_again.params);

    config.seed = 2;
    let (ape2, _) = train_ape(&outputs, &gold, &config).unwrap();
    assert_ne!(ape1.params, ape2.params);
    assert_eq!(ape2.config.seed, 2, "model file records the effective seed");
}
