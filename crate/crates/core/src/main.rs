use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridmt::pipeline::{self, artifact, PipelineConfig};
use hybridmt::text::Sentence;
use hybridmt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hybridmt",
    about = "Phrase-based statistical MT with an LSTM post-editing stage",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for within-stage parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides the configured seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, clean and truecase the training corpus.
    Preprocess,
    /// Print sentence/token/vocabulary counts of the prepared corpus.
    Stats,
    /// Train the n-gram language model and write lm.arpa.
    TrainLm,
    /// Run IBM Model 1 in both directions and symmetrize.
    Align,
    /// Extract and score the phrase table.
    ExtractPhrases,
    /// train-lm + align + extract-phrases in one go.
    TrainSmt,
    /// Decode sentences with the SMT model (defaults to the APE split).
    SmtTranslate {
        /// One tokenized sentence per line; defaults to the APE split of
        /// the prepared corpus.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file; stdout when translating --input without it.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Emit per-stack diagnostics to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Train the LSTM post-editor on (SMT output, gold) pairs.
    TrainApe,
    /// SGM in, SGM out through SMT + post-editor.
    HybridTranslate {
        /// Test set in SGM form; defaults to paths.test_sgm.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output SGM path; defaults to <out>/translated.sgm.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a hypothesis file against a reference file.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Every stage in order, writing report.json.
    RunAll,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: cannot configure {} workers: {e}", cli.workers);
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config <file> is required for this command"))?;
    let mut config = PipelineConfig::load(path)?;
    if let Some(out) = &cli.out {
        config.paths.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn read_lines(path: &PathBuf) -> Result<Vec<Sentence>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(Sentence::from_line)
        .collect())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess => {
            let config = load_config(&cli)?;
            let prepared = pipeline::preprocess(&config)?;
            pipeline::write_prepared(&config, &prepared)?;
            println!(
                "prepared {} pairs ({} dropped by cleaning)",
                prepared.corpus.len(),
                count_raw_pairs(&config)?.saturating_sub(prepared.corpus.len())
            );
        }
        Command::Stats => {
            let config = load_config(&cli)?;
            let prepared = pipeline::load_prepared(&config, "stats")?;
            let s = prepared.stats;
            println!("# sentences (src)\t{}", s.src_sentences);
            println!("# sentences (tgt)\t{}", s.tgt_sentences);
            println!("# words (src)\t{}", s.src_tokens);
            println!("# words (tgt)\t{}", s.tgt_tokens);
            println!("# vocab (src)\t{}", s.src_vocab);
            println!("# vocab (tgt)\t{}", s.tgt_vocab);
        }
        Command::TrainLm => {
            let config = load_config(&cli)?;
            let prepared = pipeline::load_prepared(&config, "train-lm")?;
            let (smt_part, _) = pipeline::split(&prepared.corpus, &config)?;
            let (lm, perplexity) = pipeline::train_lm_stage(&smt_part, &prepared.mono, &config)?;
            std::fs::write(config.out(artifact::LM_ARPA), hybridmt::lm::write_arpa(&lm))?;
            println!("order-{} model, training perplexity {perplexity:.4}", config.lm_order);
        }
        Command::Align => {
            let config = load_config(&cli)?;
            let prepared = pipeline::load_prepared(&config, "align")?;
            let (smt_part, _) = pipeline::split(&prepared.corpus, &config)?;
            let aligned = pipeline::align_stage(&smt_part, &config)?;
            pipeline::write_align_outputs(&config, &aligned)?;
            println!(
                "EM log-likelihood fwd {:.4}, rev {:.4}",
                aligned.loglik_fwd.last().copied().unwrap_or(f64::NAN),
                aligned.loglik_rev.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::ExtractPhrases => {
            let config = load_config(&cli)?;
            let prepared = pipeline::load_prepared(&config, "extract-phrases")?;
            let (smt_part, _) = pipeline::split(&prepared.corpus, &config)?;
            let gdf = pipeline::load_gdf_alignments(&config, &smt_part, "extract-phrases")?;
            let (lex_fwd, lex_rev) = pipeline::load_lexical_tables(&config, "extract-phrases")?;
            let table = hybridmt::phrase::build_table(
                &smt_part,
                &gdf,
                &lex_fwd,
                &lex_rev,
                config.max_phrase_len,
            )?;
            std::fs::write(
                config.out(artifact::PHRASE_TABLE),
                hybridmt::phrase::write_table(&table),
            )?;
            println!("{} phrase-table entries", table.num_entries());
        }
        Command::TrainSmt => {
            let config = load_config(&cli)?;
            let prepared = pipeline::load_prepared(&config, "train-smt")?;
            let (smt_part, _) = pipeline::split(&prepared.corpus, &config)?;
            let mut report = pipeline::RunReport::default();
            let artifacts =
                pipeline::train_smt(&smt_part, &prepared.mono, &config, &mut report)?;
            println!(
                "LM perplexity {:.4}, {} phrase-table entries",
                report.lm_perplexity.unwrap_or(f64::NAN),
                artifacts.table.num_entries()
            );
        }
        Command::SmtTranslate {
            input,
            output,
            trace,
        } => {
            let config = load_config(&cli)?;
            let lm = pipeline::load_lm(&config, "smt-translate")?;
            let table = pipeline::load_phrase_table(&config, "smt-translate")?;
            let (sentences, default_gold) = match input {
                Some(path) => (read_lines(path)?, None),
                None => {
                    let prepared = pipeline::load_prepared(&config, "smt-translate")?;
                    let (_, ape_part) = pipeline::split(&prepared.corpus, &config)?;
                    let sources: Vec<Sentence> = ape_part.sources().cloned().collect();
                    let gold: Vec<Sentence> = ape_part.targets().cloned().collect();
                    (sources, Some(gold))
                }
            };
            let outputs = if *trace {
                let (outputs, traces) =
                    pipeline::smt_translate_traced(&sentences, &table, &lm, &config.decoder)?;
                for (idx, trace) in traces.iter().enumerate() {
                    for line in trace {
                        eprintln!("{idx}\t{}", line.line());
                    }
                }
                outputs
            } else {
                pipeline::smt_translate(&sentences, &table, &lm, &config.decoder)?
            };
            let rendered: String = outputs
                .iter()
                .map(|s| s.detokenize())
                .collect::<Vec<_>>()
                .join("\n")
                + "\n";
            match (output, default_gold) {
                (Some(path), gold) => {
                    std::fs::write(path, rendered)?;
                    if let Some(gold) = gold {
                        write_gold(&config, &gold)?;
                    }
                }
                (None, Some(gold)) => {
                    std::fs::write(config.out(artifact::APE_INPUT), rendered)?;
                    write_gold(&config, &gold)?;
                    println!(
                        "wrote {} translations to {}",
                        outputs.len(),
                        config.out(artifact::APE_INPUT).display()
                    );
                }
                (None, None) => print!("{rendered}"),
            }
        }
        Command::TrainApe => {
            let config = load_config(&cli)?;
            let smt_outputs =
                read_lines(&config.out(artifact::APE_INPUT)).map_err(|_| Error::MissingArtifact {
                    stage: "train-ape".into(),
                    path: config.out(artifact::APE_INPUT),
                })?;
            let gold =
                read_lines(&config.out(artifact::APE_GOLD)).map_err(|_| Error::MissingArtifact {
                    stage: "train-ape".into(),
                    path: config.out(artifact::APE_GOLD),
                })?;
            let (ape, curve) = pipeline::train_ape(&smt_outputs, &gold, &config)?;
            pipeline::write_ape(&config, &ape)?;
            println!(
                "trained {} epochs, final loss {:.6}",
                curve.len(),
                curve.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::HybridTranslate { input, output } => {
            let config = load_config(&cli)?;
            let sgm_path = input
                .clone()
                .or_else(|| config.paths.test_sgm.clone())
                .ok_or_else(|| Error::config("no test SGM: pass --input or set paths.test_sgm"))?;
            let sgm_bytes = std::fs::read(&sgm_path).map_err(|_| Error::MissingArtifact {
                stage: "hybrid-translate".into(),
                path: sgm_path.clone(),
            })?;
            let lm = pipeline::load_lm(&config, "hybrid-translate")?;
            let table = pipeline::load_phrase_table(&config, "hybrid-translate")?;
            let ape = pipeline::load_ape(&config, "hybrid-translate")?;
            let prepared = pipeline::load_prepared(&config, "hybrid-translate")?;
            let (out_sgm, lines) = pipeline::hybrid_translate(
                &sgm_bytes,
                &table,
                &lm,
                &ape,
                &prepared.truecase_src,
                &config,
            )?;
            let sgm_out = output.clone().unwrap_or_else(|| config.out(artifact::TRANSLATED_SGM));
            std::fs::write(&sgm_out, &out_sgm)?;
            std::fs::write(
                config.out(artifact::TRANSLATED_TXT),
                lines.join("\n") + "\n",
            )?;
            println!("wrote {} segments to {}", lines.len(), sgm_out.display());
        }
        Command::Evaluate { hyp, reference } => {
            let metrics = pipeline::evaluate(hyp, reference)?;
            print!("{}", metrics.table());
        }
        Command::RunAll => {
            let config = load_config(&cli)?;
            let report = pipeline::run_all(&config)?;
            if let Some(metrics) = &report.metrics {
                print!("{}", metrics.table());
            }
            println!("report written to {}", config.out(artifact::REPORT).display());
        }
    }
    Ok(())
}

fn write_gold(config: &PipelineConfig, gold: &[Sentence]) -> Result<()> {
    let rendered: String =
        gold.iter().map(|s| s.detokenize()).collect::<Vec<_>>().join("\n") + "\n";
    Ok(std::fs::write(config.out(artifact::APE_GOLD), rendered)?)
}

fn count_raw_pairs(config: &PipelineConfig) -> Result<usize> {
    Ok(std::fs::read_to_string(&config.paths.train_src)?
        .lines()
        .count())
}
