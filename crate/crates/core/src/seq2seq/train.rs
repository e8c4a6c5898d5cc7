use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grad_framed, FramedPair, Seq2SeqParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    PlainSgd,
    AdaptiveMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Hidden and embedding size.
    pub d: usize,
    pub max_vocab: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Max global gradient norm.
    pub grad_clip: f64,
    pub seed: u64,
    /// Decode-time output cap.
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 64,
            max_vocab: 10_000,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: Optimizer::AdaptiveMoment,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            grad_clip: 5.0,
            seed: 42,
            max_len: 80,
        }
    }
}

struct AdamState {
    m: Seq2SeqParams,
    v: Seq2SeqParams,
    step: u64,
}

fn apply_update(
    params: &mut Seq2SeqParams,
    grads: &Seq2SeqParams,
    config: &TrainConfig,
    adam: &mut Option<AdamState>,
) {
    match adam {
        None => {
            for ((_, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= config.learning_rate * gv;
                }
            }
        }
        Some(state) => {
            state.step += 1;
            let bc1 = 1.0 - config.beta1.powi(state.step as i32);
            let bc2 = 1.0 - config.beta2.powi(state.step as i32);
            let m_t = state.m.tensors_mut();
            let v_t = state.v.tensors_mut();
            for (((_, p), (_, g)), ((_, m), (_, v))) in params
                .tensors_mut()
                .into_iter()
                .zip(grads.tensors())
                .zip(m_t.into_iter().zip(v_t))
            {
                for k in 0..p.len() {
                    m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
                    v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
                    let m_hat = m[k] / bc1;
                    let v_hat = v[k] / bc2;
                    p[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
                }
            }
        }
    }
}

/// Mini-batch training with global-norm clipping. The shuffle order comes
/// from the seeded generator, so a fixed seed reproduces the loss curve
/// and the final parameters exactly.
pub fn train(
    mut params: Seq2SeqParams,
    corpus: &[(Vec<u32>, Vec<u32>)],
    config: &TrainConfig,
) -> Result<(Seq2SeqParams, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(Error::param("cannot train on an empty corpus"));
    }
    let framed: Vec<FramedPair> = corpus
        .iter()
        .map(|(s, t)| FramedPair::new(s, t))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..framed.len()).collect();
    let mut adam = match config.optimizer {
        Optimizer::PlainSgd => None,
        Optimizer::AdaptiveMoment => Some(AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }),
    };

    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch_ids in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<FramedPair> =
                batch_ids.iter().map(|&i| framed[i].clone()).collect();
            let (loss, mut grads) = grad_framed(&params, &batch)?;
            epoch_loss += loss * batch.len() as f64;
            let norm = grads.global_norm();
            if norm > config.grad_clip && norm > 0.0 {
                grads.scale(config.grad_clip / norm);
            }
            apply_update(&mut params, &grads, config, &mut adam);
        }
        curve.push(epoch_loss / framed.len() as f64);
    }
    Ok((params, curve))
}
