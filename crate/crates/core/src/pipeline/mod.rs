//! End-to-end orchestration: preprocessing, corpus split, SMT training,
//! SMT translation of the post-editing split, APE training, hybrid
//! inference over SGM test sets, and evaluation.

mod config;
mod report;

pub use config::{artifact, PipelineConfig, PipelinePaths};
pub use report::{MetricsBlock, RunReport, StageReport};

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::align::{
    grow_diag_final, ibm1_train_with_curve, read_alignment_links, read_lexical_table,
    viterbi_align, write_alignments, write_lexical_table, AlignmentMatrix, LexicalTable,
};
use crate::decoder::{decode, decode_with_trace, DecoderConfig, StackTrace, Translation};
use crate::error::{Error, Result};
use crate::lm::{count_ngrams, estimate_kn, read_arpa, write_arpa, NgramModel, Vocab};
use crate::metrics::{bleu, character, ter, EvalPair};
use crate::phrase::{build_table, read_table, write_table, PhraseTable};
use crate::seq2seq::{
    init_params, read_model, train, translate, ApeVocab, Seq2SeqParams, TrainConfig,
};
use crate::text::{
    clean_corpus, corpus_stats, detruecase, emit_sgm, parse_sgm, tokenize, train_truecaser,
    truecase, CorpusStats, ParallelCorpus, Sentence, TruecaseModel,
};

fn read_text(path: &Path, stage: &str) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage: stage.to_string(),
            path: path.to_path_buf(),
        });
    }
    Ok(std::fs::read_to_string(path)?)
}

fn read_sentences(path: &Path, stage: &str) -> Result<Vec<Sentence>> {
    Ok(read_text(path, stage)?
        .lines()
        .map(Sentence::from_line)
        .collect())
}

fn write_sentences(path: &Path, sentences: &[Sentence]) -> Result<()> {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.detokenize());
        out.push('\n');
    }
    Ok(std::fs::write(path, out)?)
}

fn write_truecase(path: &Path, model: &TruecaseModel) -> Result<()> {
    let mut lines: Vec<(&String, &u64)> = model.counts.iter().collect();
    lines.sort();
    let mut out = String::new();
    for (form, count) in lines {
        out.push_str(&format!("{form}\t{count}\n"));
    }
    Ok(std::fs::write(path, out)?)
}

fn read_truecase(path: &Path, stage: &str) -> Result<TruecaseModel> {
    let text = read_text(path, stage)?;
    let mut counts = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (form, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(idx + 1, "expected `form<TAB>count`"))?;
        let count: u64 = count
            .parse()
            .map_err(|_| Error::parse(idx + 1, "bad count"))?;
        counts.insert(form.to_string(), count);
    }
    Ok(TruecaseModel::from_counts(counts))
}

/// Tokenized, cleaned and truecased training material.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub corpus: ParallelCorpus,
    pub mono: Vec<Sentence>,
    pub truecase_src: TruecaseModel,
    pub truecase_tgt: TruecaseModel,
    pub stats: CorpusStats,
}

/// Tokenizes both corpus sides, drops pairs outside 1..=clean_max_len
/// tokens, then trains and applies per-side truecasers (cleaning happens
/// before truecasing).
pub fn preprocess(config: &PipelineConfig) -> Result<Prepared> {
    let src_text = read_text(&config.paths.train_src, "preprocess")?;
    let tgt_text = read_text(&config.paths.train_tgt, "preprocess")?;
    let src_lines: Vec<&str> = src_text.lines().collect();
    let tgt_lines: Vec<&str> = tgt_text.lines().collect();
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::config(format!(
            "train corpus sides differ: {} vs {} lines",
            src_lines.len(),
            tgt_lines.len()
        )));
    }
    let tokenized = ParallelCorpus::new(
        src_lines
            .iter()
            .zip(&tgt_lines)
            .map(|(s, t)| (tokenize(s), tokenize(t)))
            .collect(),
    );
    let cleaned = clean_corpus(&tokenized, config.clean_max_len)?;

    let src_side: Vec<Sentence> = cleaned.sources().cloned().collect();
    let tgt_side: Vec<Sentence> = cleaned.targets().cloned().collect();
    let truecase_src = train_truecaser(&src_side);
    let truecase_tgt = train_truecaser(&tgt_side);

    let corpus = ParallelCorpus::new(
        cleaned
            .pairs
            .iter()
            .map(|(s, t)| (truecase(s, &truecase_src), truecase(t, &truecase_tgt)))
            .collect(),
    );

    let mono = match &config.paths.mono_tgt {
        Some(path) => read_text(path, "preprocess")?
            .lines()
            .map(|l| truecase(&tokenize(l), &truecase_tgt))
            .collect(),
        None => Vec::new(),
    };

    let stats = corpus_stats(&corpus);
    Ok(Prepared {
        corpus,
        mono,
        truecase_src,
        truecase_tgt,
        stats,
    })
}

pub fn write_prepared(config: &PipelineConfig, prepared: &Prepared) -> Result<()> {
    std::fs::create_dir_all(&config.paths.out_dir)?;
    let src: Vec<Sentence> = prepared.corpus.sources().cloned().collect();
    let tgt: Vec<Sentence> = prepared.corpus.targets().cloned().collect();
    write_sentences(&config.out(artifact::PREPARED_SRC), &src)?;
    write_sentences(&config.out(artifact::PREPARED_TGT), &tgt)?;
    if !prepared.mono.is_empty() {
        write_sentences(&config.out(artifact::PREPARED_MONO), &prepared.mono)?;
    }
    write_truecase(&config.out(artifact::TRUECASE_SRC), &prepared.truecase_src)?;
    write_truecase(&config.out(artifact::TRUECASE_TGT), &prepared.truecase_tgt)?;
    Ok(())
}

pub fn load_prepared(config: &PipelineConfig, stage: &str) -> Result<Prepared> {
    let src = read_sentences(&config.out(artifact::PREPARED_SRC), stage)?;
    let tgt = read_sentences(&config.out(artifact::PREPARED_TGT), stage)?;
    if src.len() != tgt.len() {
        return Err(Error::stage(stage, "prepared corpus sides differ in length"));
    }
    let mono_path = config.out(artifact::PREPARED_MONO);
    let mono = if mono_path.exists() {
        read_sentences(&mono_path, stage)?
    } else {
        Vec::new()
    };
    let truecase_src = read_truecase(&config.out(artifact::TRUECASE_SRC), stage)?;
    let truecase_tgt = read_truecase(&config.out(artifact::TRUECASE_TGT), stage)?;
    let corpus = ParallelCorpus::new(src.into_iter().zip(tgt).collect());
    let stats = corpus_stats(&corpus);
    Ok(Prepared {
        corpus,
        mono,
        truecase_src,
        truecase_tgt,
        stats,
    })
}

/// Deterministic contiguous split: the first `smt_train_count` pairs train
/// the SMT system, the next `ape_train_count` feed the post-editor.
pub fn split(corpus: &ParallelCorpus, config: &PipelineConfig) -> Result<(ParallelCorpus, ParallelCorpus)> {
    let need = config.smt_train_count + config.ape_train_count;
    if need > corpus.len() {
        return Err(Error::config(format!(
            "split needs smt_train_count ({}) + ape_train_count ({}) = {need} pairs, corpus has {}",
            config.smt_train_count,
            config.ape_train_count,
            corpus.len()
        )));
    }
    let smt = ParallelCorpus::new(corpus.pairs[..config.smt_train_count].to_vec());
    let ape = ParallelCorpus::new(
        corpus.pairs[config.smt_train_count..need].to_vec(),
    );
    Ok((smt, ape))
}

/// Order-`lm_order` Kneser-Ney model over the SMT split's target side plus
/// any monolingual data.
pub fn train_lm_stage(
    smt_part: &ParallelCorpus,
    mono: &[Sentence],
    config: &PipelineConfig,
) -> Result<(NgramModel, f64)> {
    let mut sentences: Vec<Sentence> = smt_part.targets().cloned().collect();
    sentences.extend(mono.iter().cloned());
    let vocab = Vocab::build(&sentences);
    let counts = count_ngrams(&sentences, &vocab, config.lm_order)?;
    let model = estimate_kn(&counts, vocab)?;
    let perplexity = model.perplexity(&sentences)?;
    Ok((model, perplexity))
}

pub struct AlignOutputs {
    pub lex_fwd: LexicalTable,
    pub lex_rev: LexicalTable,
    pub fwd: Vec<AlignmentMatrix>,
    pub rev: Vec<AlignmentMatrix>,
    pub gdf: Vec<AlignmentMatrix>,
    pub loglik_fwd: Vec<f64>,
    pub loglik_rev: Vec<f64>,
}

/// IBM Model 1 in both directions, Viterbi alignments, and grow-diag-final
/// symmetrization.
pub fn align_stage(smt_part: &ParallelCorpus, config: &PipelineConfig) -> Result<AlignOutputs> {
    let swapped = ParallelCorpus::new(
        smt_part
            .pairs
            .iter()
            .map(|(s, t)| (t.clone(), s.clone()))
            .collect(),
    );
    let (lex_fwd, loglik_fwd) = ibm1_train_with_curve(smt_part, config.em_iterations)?;
    let (lex_rev, loglik_rev) = ibm1_train_with_curve(&swapped, config.em_iterations)?;

    let fwd: Vec<AlignmentMatrix> = smt_part
        .pairs
        .par_iter()
        .map(|(s, t)| viterbi_align(&lex_fwd, s, t))
        .collect();
    let rev: Vec<AlignmentMatrix> = smt_part
        .pairs
        .par_iter()
        .map(|(s, t)| {
            let m = viterbi_align(&lex_rev, t, s);
            // Reorient into source-target space.
            AlignmentMatrix {
                src_len: m.tgt_len,
                tgt_len: m.src_len,
                links: m.links.iter().map(|&(i, j)| (j, i)).collect(),
            }
        })
        .collect();
    let gdf: Vec<AlignmentMatrix> = fwd
        .par_iter()
        .zip(&rev)
        .map(|(f, r)| grow_diag_final(f, r))
        .collect::<Result<_>>()?;

    Ok(AlignOutputs {
        lex_fwd,
        lex_rev,
        fwd,
        rev,
        gdf,
        loglik_fwd,
        loglik_rev,
    })
}

pub fn write_align_outputs(config: &PipelineConfig, out: &AlignOutputs) -> Result<()> {
    std::fs::write(config.out(artifact::LEX_FWD), write_lexical_table(&out.lex_fwd))?;
    std::fs::write(config.out(artifact::LEX_REV), write_lexical_table(&out.lex_rev))?;
    std::fs::write(config.out(artifact::ALIGN_FWD), write_alignments(&out.fwd))?;
    std::fs::write(config.out(artifact::ALIGN_REV), write_alignments(&out.rev))?;
    std::fs::write(config.out(artifact::ALIGN_GDF), write_alignments(&out.gdf))?;
    Ok(())
}

pub fn load_gdf_alignments(
    config: &PipelineConfig,
    corpus: &ParallelCorpus,
    stage: &str,
) -> Result<Vec<AlignmentMatrix>> {
    let path = config.out(artifact::ALIGN_GDF);
    let links = read_alignment_links(read_text(&path, stage)?.as_bytes())?;
    if links.len() != corpus.len() {
        return Err(Error::stage(
            stage,
            format!(
                "{} has {} lines but the SMT split has {} pairs",
                path.display(),
                links.len(),
                corpus.len()
            ),
        ));
    }
    corpus
        .pairs
        .iter()
        .zip(links)
        .map(|((s, t), l)| AlignmentMatrix::new(s.len(), t.len(), l))
        .collect()
}

/// Trained SMT artifacts: language model, phrase table, lexical tables.
pub struct SmtArtifacts {
    pub lm: NgramModel,
    pub table: PhraseTable,
    pub lex_fwd: LexicalTable,
    pub lex_rev: LexicalTable,
}

/// Full SMT training: LM, bidirectional EM alignment, phrase extraction.
/// Persists every artifact and records curves in the report.
pub fn train_smt(
    smt_part: &ParallelCorpus,
    mono: &[Sentence],
    config: &PipelineConfig,
    report: &mut RunReport,
) -> Result<SmtArtifacts> {
    std::fs::create_dir_all(&config.paths.out_dir)?;

    let (lm, perplexity) = timed(report, "train-lm", || {
        train_lm_stage(smt_part, mono, config)
    })?;
    std::fs::write(config.out(artifact::LM_ARPA), write_arpa(&lm))?;
    report.lm_perplexity = Some(perplexity);

    let aligned = timed(report, "align", || align_stage(smt_part, config))?;
    write_align_outputs(config, &aligned)?;
    report.em_loglik_fwd = aligned.loglik_fwd.clone();
    report.em_loglik_rev = aligned.loglik_rev.clone();

    let table = timed(report, "extract-phrases", || {
        build_table(
            smt_part,
            &aligned.gdf,
            &aligned.lex_fwd,
            &aligned.lex_rev,
            config.max_phrase_len,
        )
    })?;
    std::fs::write(config.out(artifact::PHRASE_TABLE), write_table(&table))?;

    Ok(SmtArtifacts {
        lm,
        table,
        lex_fwd: aligned.lex_fwd,
        lex_rev: aligned.lex_rev,
    })
}

pub fn load_lm(config: &PipelineConfig, stage: &str) -> Result<NgramModel> {
    read_arpa(read_text(&config.out(artifact::LM_ARPA), stage)?.as_bytes())
}

pub fn load_phrase_table(config: &PipelineConfig, stage: &str) -> Result<PhraseTable> {
    read_table(read_text(&config.out(artifact::PHRASE_TABLE), stage)?.as_bytes())
}

pub fn load_lexical_tables(
    config: &PipelineConfig,
    stage: &str,
) -> Result<(LexicalTable, LexicalTable)> {
    Ok((
        read_lexical_table(read_text(&config.out(artifact::LEX_FWD), stage)?.as_bytes())?,
        read_lexical_table(read_text(&config.out(artifact::LEX_REV), stage)?.as_bytes())?,
    ))
}

/// Decodes a batch of sentences, order preserved.
pub fn smt_translate(
    sentences: &[Sentence],
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> Result<Vec<Sentence>> {
    let translations: Vec<Translation> = sentences
        .par_iter()
        .map(|s| decode(s, table, lm, config))
        .collect::<Result<_>>()?;
    Ok(translations
        .into_iter()
        .map(|t| Sentence::from_line(&t.tokens.join(" ")))
        .collect())
}

/// As `smt_translate` but also returns per-sentence stack traces.
pub fn smt_translate_traced(
    sentences: &[Sentence],
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> Result<(Vec<Sentence>, Vec<Vec<StackTrace>>)> {
    let translations: Vec<(Translation, Vec<StackTrace>)> = sentences
        .par_iter()
        .map(|s| decode_with_trace(s, table, lm, config))
        .collect::<Result<_>>()?;
    let mut outs = Vec::with_capacity(translations.len());
    let mut traces = Vec::with_capacity(translations.len());
    for (t, tr) in translations {
        outs.push(Sentence::from_line(&t.tokens.join(" ")));
        traces.push(tr);
    }
    Ok((outs, traces))
}

/// Trained post-editor.
#[derive(Debug)]
pub struct ApeArtifacts {
    pub params: Seq2SeqParams,
    pub vocab: ApeVocab,
    pub config: TrainConfig,
}

/// Trains the post-editor on (SMT output, gold) pairs and persists the
/// model file. The pipeline-level seed overrides the embedded training
/// seed so one knob governs the whole run.
pub fn train_ape(
    smt_outputs: &[Sentence],
    gold: &[Sentence],
    config: &PipelineConfig,
) -> Result<(ApeArtifacts, Vec<f64>)> {
    if smt_outputs.len() != gold.len() {
        return Err(Error::stage(
            "train-ape",
            format!(
                "SMT outputs ({}) and gold ({}) differ in length",
                smt_outputs.len(),
                gold.len()
            ),
        ));
    }
    let mut ape_config = config.ape.clone();
    ape_config.seed = config.seed;
    let vocab = ApeVocab::build(smt_outputs.iter().chain(gold), ape_config.max_vocab);
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = smt_outputs
        .iter()
        .zip(gold)
        .map(|(s, g)| (vocab.map_sentence(s), vocab.map_sentence(g)))
        .collect();
    let params = init_params(ape_config.d, vocab.len(), ape_config.seed);
    let (params, curve) = train(params, &pairs, &ape_config)?;
    let artifacts = ApeArtifacts {
        params,
        vocab,
        config: ape_config,
    };
    Ok((artifacts, curve))
}

pub fn write_ape(config: &PipelineConfig, ape: &ApeArtifacts) -> Result<()> {
    Ok(std::fs::write(
        config.out(artifact::APE_MODEL),
        crate::seq2seq::write_model(&ape.params, &ape.vocab, &ape.config),
    )?)
}

pub fn load_ape(config: &PipelineConfig, stage: &str) -> Result<ApeArtifacts> {
    let bytes = read_text(&config.out(artifact::APE_MODEL), stage)?;
    let (params, vocab, train_config) = read_model(bytes.as_bytes())?;
    Ok(ApeArtifacts {
        params,
        vocab,
        config: train_config,
    })
}

/// Translates one preprocessed source sentence through SMT then the
/// post-editor; returns the detruecased target sentence.
fn hybrid_one(
    source: &Sentence,
    smt: &SmtForInference<'_>,
    ape: &ApeArtifacts,
) -> Result<Sentence> {
    if source.is_empty() {
        return Ok(Sentence::default());
    }
    let translation = decode(source, smt.table, smt.lm, smt.decoder)?;
    let smt_sentence = Sentence::from_line(&translation.tokens.join(" "));
    let edited = translate(&ape.params, &smt_sentence, &ape.vocab, ape.config.max_len);
    Ok(detruecase(&edited))
}

struct SmtForInference<'a> {
    table: &'a PhraseTable,
    lm: &'a NgramModel,
    decoder: &'a DecoderConfig,
}

/// Full hybrid inference over an SGM test set: parse, preprocess with the
/// source truecaser, SMT-decode, post-edit, detruecase, and re-emit with
/// the set/doc/seg structure intact. Also returns the plain-text lines in
/// segment order.
pub fn hybrid_translate(
    sgm_bytes: &[u8],
    table: &PhraseTable,
    lm: &NgramModel,
    ape: &ApeArtifacts,
    truecase_src: &TruecaseModel,
    config: &PipelineConfig,
) -> Result<(Vec<u8>, Vec<String>)> {
    let mut doc = parse_sgm(sgm_bytes)?;
    let smt = SmtForInference {
        table,
        lm,
        decoder: &config.decoder,
    };

    // Gather segment texts, translate in parallel, write back in order.
    let sources: Vec<Sentence> = doc
        .docs
        .iter()
        .flat_map(|d| d.segs.iter())
        .map(|seg| truecase(&tokenize(&seg.text), truecase_src))
        .collect();
    let outputs: Vec<Sentence> = sources
        .par_iter()
        .map(|s| hybrid_one(s, &smt, ape))
        .collect::<Result<_>>()?;

    let mut lines = Vec::with_capacity(outputs.len());
    let mut cursor = 0;
    for d in &mut doc.docs {
        for seg in &mut d.segs {
            let text = outputs[cursor].detokenize();
            seg.text = text.clone();
            lines.push(text);
            cursor += 1;
        }
    }
    Ok((emit_sgm(&doc), lines))
}

/// Scores a hypothesis file against a reference file (one pre-tokenized
/// sentence per line in both).
pub fn evaluate(hyp_path: &Path, ref_path: &Path) -> Result<MetricsBlock> {
    let hyp_text = read_text(hyp_path, "evaluate")?;
    let ref_text = read_text(ref_path, "evaluate")?;
    let hyp_lines: Vec<&str> = hyp_text.lines().collect();
    let ref_lines: Vec<&str> = ref_text.lines().collect();
    if hyp_lines.len() != ref_lines.len() {
        return Err(Error::stage(
            "evaluate",
            format!(
                "line counts differ: hypothesis has {}, reference has {}",
                hyp_lines.len(),
                ref_lines.len()
            ),
        ));
    }
    let pairs: Vec<EvalPair> = hyp_lines
        .iter()
        .zip(&ref_lines)
        .map(|(h, r)| EvalPair::new(Sentence::from_line(h), Sentence::from_line(r)))
        .collect();
    Ok(MetricsBlock {
        bleu: bleu(&pairs, 4, false)?,
        bleu_cased: bleu(&pairs, 4, true)?,
        ter: ter(&pairs)?.score,
        character: character(&pairs)?.score,
    })
}

fn timed<T>(report: &mut RunReport, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    report.add_stage(name, start.elapsed().as_secs_f64())?;
    Ok(out)
}

/// Runs every stage in order and writes all artifacts plus report.json.
/// Evaluation runs only when both a test SGM and a reference are
/// configured.
pub fn run_all(config: &PipelineConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    std::fs::create_dir_all(&config.paths.out_dir)?;

    let prepared = timed(&mut report, "preprocess", || preprocess(config))?;
    write_prepared(config, &prepared)?;
    report.corpus_stats = Some(prepared.stats);

    let (smt_part, ape_part) = timed(&mut report, "split", || split(&prepared.corpus, config))?;

    let artifacts = train_smt(&smt_part, &prepared.mono, config, &mut report)?;

    let ape_sources: Vec<Sentence> = ape_part.sources().cloned().collect();
    let ape_gold: Vec<Sentence> = ape_part.targets().cloned().collect();
    let smt_outputs = timed(&mut report, "smt-translate", || {
        smt_translate(&ape_sources, &artifacts.table, &artifacts.lm, &config.decoder)
    })?;
    write_sentences(&config.out(artifact::APE_INPUT), &smt_outputs)?;
    write_sentences(&config.out(artifact::APE_GOLD), &ape_gold)?;

    let (ape, curve) = timed(&mut report, "train-ape", || {
        train_ape(&smt_outputs, &ape_gold, config)
    })?;
    write_ape(config, &ape)?;
    report.ape_loss_curve = curve;

    if let Some(test_sgm) = &config.paths.test_sgm {
        let sgm_bytes = std::fs::read(test_sgm)?;
        let (out_sgm, lines) = timed(&mut report, "hybrid-translate", || {
            hybrid_translate(
                &sgm_bytes,
                &artifacts.table,
                &artifacts.lm,
                &ape,
                &prepared.truecase_src,
                config,
            )
        })?;
        std::fs::write(config.out(artifact::TRANSLATED_SGM), &out_sgm)?;
        std::fs::write(
            config.out(artifact::TRANSLATED_TXT),
            lines.join("\n") + "\n",
        )?;

        if let Some(test_ref) = &config.paths.test_ref {
            let hyp = config.out(artifact::TRANSLATED_TXT);
            let reference = test_ref.clone();
            let metrics = timed(&mut report, "evaluate", || evaluate(&hyp, &reference))?;
            report.metrics = Some(metrics);
        }
    }

    std::fs::write(config.out(artifact::REPORT), report.to_json())?;
    Ok(report)
}

#[cfg(test)]
mod tests;
