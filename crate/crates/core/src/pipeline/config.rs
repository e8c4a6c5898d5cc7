use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decoder::DecoderConfig;
use crate::error::{Error, Result};
use crate::seq2seq::TrainConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelinePaths {
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    #[serde(default)]
    pub mono_tgt: Option<PathBuf>,
    #[serde(default)]
    pub test_sgm: Option<PathBuf>,
    /// Plain-text reference for the test set, one tokenized sentence per
    /// line; enables the evaluation stage of `run-all`.
    #[serde(default)]
    pub test_ref: Option<PathBuf>,
    pub out_dir: PathBuf,
}

/// Whole-run configuration; unknown JSON keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PipelinePaths,
    #[serde(default = "default_smt_train_count")]
    pub smt_train_count: usize,
    #[serde(default = "default_ape_train_count")]
    pub ape_train_count: usize,
    #[serde(default = "default_lm_order")]
    pub lm_order: usize,
    #[serde(default = "default_max_phrase_len")]
    pub max_phrase_len: usize,
    #[serde(default = "default_em_iterations")]
    pub em_iterations: usize,
    #[serde(default = "default_clean_max_len")]
    pub clean_max_len: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub ape: TrainConfig,
}

fn default_smt_train_count() -> usize {
    762_022
}
fn default_ape_train_count() -> usize {
    200_000
}
fn default_lm_order() -> usize {
    7
}
fn default_max_phrase_len() -> usize {
    7
}
fn default_em_iterations() -> usize {
    5
}
fn default_clean_max_len() -> usize {
    80
}
fn default_seed() -> u64 {
    42
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lm_order < 1 {
            return Err(Error::config("lm_order must be >= 1"));
        }
        if self.max_phrase_len < 1 {
            return Err(Error::config("max_phrase_len must be >= 1"));
        }
        if self.em_iterations < 1 {
            return Err(Error::config("em_iterations must be >= 1"));
        }
        if self.clean_max_len < 1 {
            return Err(Error::config("clean_max_len must be >= 1"));
        }
        Ok(())
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }
}

pub mod artifact {
    pub const PREPARED_SRC: &str = "prepared.src";
    pub const PREPARED_TGT: &str = "prepared.tgt";
    pub const PREPARED_MONO: &str = "prepared.mono";
    pub const TRUECASE_SRC: &str = "truecase.src";
    pub const TRUECASE_TGT: &str = "truecase.tgt";
    pub const LM_ARPA: &str = "lm.arpa";
    pub const LEX_FWD: &str = "lex.fwd";
    pub const LEX_REV: &str = "lex.rev";
    pub const ALIGN_FWD: &str = "align.fwd";
    pub const ALIGN_REV: &str = "align.rev";
    pub const ALIGN_GDF: &str = "align.gdf";
    pub const PHRASE_TABLE: &str = "phrase-table.txt";
    pub const APE_INPUT: &str = "ape-input.txt";
    pub const APE_GOLD: &str = "ape-gold.txt";
    pub const APE_MODEL: &str = "ape.model";
    pub const TRANSLATED_SGM: &str = "translated.sgm";
    pub const TRANSLATED_TXT: &str = "translated.txt";
    pub const REPORT: &str = "report.json";
}
