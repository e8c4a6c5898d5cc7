use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::CorpusStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub bleu: f64,
    pub bleu_cased: f64,
    pub ter: f64,
    pub character: f64,
}

impl MetricsBlock {
    /// `metric<TAB>score` lines, 4 decimal places, fixed row order.
    pub fn table(&self) -> String {
        format!(
            "BLEU\t{:.4}\nBLEU-cased\t{:.4}\nTER\t{:.4}\nCharacTER\t{:.4}\n",
            self.bleu, self.bleu_cased, self.ter, self.character
        )
    }
}

/// Run summary: stage timings plus the headline numbers of each stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_stats: Option<CorpusStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lm_perplexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub em_loglik_fwd: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub em_loglik_rev: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ape_loss_curve: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsBlock>,
}

impl RunReport {
    /// Records a stage timing; every executed stage appears exactly once.
    pub fn add_stage(&mut self, name: &str, seconds: f64) -> Result<()> {
        if self.stages.iter().any(|s| s.name == name) {
            return Err(Error::stage(name, "stage recorded twice"));
        }
        self.stages.push(StageReport {
            name: name.to_string(),
            seconds,
        });
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}
