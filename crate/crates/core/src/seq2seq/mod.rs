//! LSTM encoder-decoder post-editor trained with exact gradients.
//!
//! A uni-directional LSTM encodes the source; its final hidden state is
//! concatenated to the decoder input at every step and its final cell
//! state initializes the decoder cell. Training is teacher-forced with the
//! targets offset one step ahead of the decoder inputs; the loss is the
//! mean-over-pairs sum-over-steps negative log likelihood (natural log).

mod io;
mod train;

pub use io::{read_model, write_model};
pub use train::{train, Optimizer, TrainConfig};

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::text::Sentence;

pub const APE_BOS: u32 = 0;
pub const APE_EOS: u32 = 1;
pub const APE_UNK: u32 = 2;
pub const APE_PAD: u32 = 3;

const RESERVED: [&str; 4] = ["<s>", "</s>", "<unk>", "<pad>"];

/// Vocabulary over the post-editing text, truncated to the most frequent
/// `max_vocab` entries (reserved ids 0..=3 included in the budget; ties
/// broken lexicographically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApeVocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl ApeVocab {
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a Sentence>, max_vocab: usize) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sent in sentences {
            for tok in &sent.tokens {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|(w, _)| !RESERVED.contains(w))
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut words: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let budget = max_vocab.saturating_sub(RESERVED.len());
        words.extend(ranked.iter().take(budget).map(|(w, _)| w.to_string()));
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        ApeVocab { words, ids }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id_or_unk(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(APE_UNK)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub(crate) fn from_words(words: Vec<String>) -> Result<Self> {
        for (i, r) in RESERVED.iter().enumerate() {
            if words.get(i).map(String::as_str) != Some(*r) {
                return Err(Error::param(format!("vocab slot {i} must be {r}")));
            }
        }
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(ApeVocab { words, ids })
    }

    pub fn map_sentence(&self, sentence: &Sentence) -> Vec<u32> {
        sentence
            .tokens
            .iter()
            .map(|t| self.id_or_unk(t.as_str()))
            .collect()
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        Mat { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// One LSTM cell; gate blocks stacked [input; forget; output; cell].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: Mat,
    pub u: Mat,
    pub b: Vec<f64>,
}

struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>, // [i; f; o; g]
    tanh_c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCell {
            input_dim,
            hidden,
            w: Mat::zeros(4 * hidden, input_dim),
            u: Mat::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    fn init(input_dim: usize, hidden: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut cell = LstmCell {
            input_dim,
            hidden,
            w: Mat::uniform(4 * hidden, input_dim, scale, rng),
            u: Mat::uniform(4 * hidden, hidden, scale, rng),
            b: vec![0.0; 4 * hidden],
        };
        // Forget-gate bias starts at +1.
        for v in &mut cell.b[hidden..2 * hidden] {
            *v = 1.0;
        }
        cell
    }

    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, StepCache) {
        let h = self.hidden;
        let mut act = self.b.clone();
        for (r, a) in act.iter_mut().enumerate() {
            let wr = self.w.row(r);
            let mut sum = 0.0;
            for (wv, xv) in wr.iter().zip(x) {
                sum += wv * xv;
            }
            let ur = self.u.row(r);
            for (uv, hv) in ur.iter().zip(h_prev) {
                sum += uv * hv;
            }
            *a += sum;
        }
        let mut gates = vec![0.0; 4 * h];
        for k in 0..h {
            gates[k] = sigmoid(act[k]);
            gates[h + k] = sigmoid(act[h + k]);
            gates[2 * h + k] = sigmoid(act[2 * h + k]);
            gates[3 * h + k] = act[3 * h + k].tanh();
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut h_new = vec![0.0; h];
        for k in 0..h {
            c[k] = gates[h + k] * c_prev[k] + gates[k] * gates[3 * h + k];
            tanh_c[k] = c[k].tanh();
            h_new[k] = gates[2 * h + k] * tanh_c[k];
        }
        let cache = StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
        };
        (h_new, c, cache)
    }

    /// Accumulates weight gradients for one step; returns (dx, dh_prev,
    /// dc_prev).
    fn step_backward(
        &self,
        cache: &StepCache,
        dh: &[f64],
        dc_in: &[f64],
        grads: &mut LstmCell,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let (gi, gf, go, gg) = (
            &cache.gates[..h],
            &cache.gates[h..2 * h],
            &cache.gates[2 * h..3 * h],
            &cache.gates[3 * h..],
        );
        let mut d_act = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for k in 0..h {
            let d_o = dh[k] * cache.tanh_c[k];
            let dc = dc_in[k] + dh[k] * go[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let d_i = dc * gg[k];
            let d_g = dc * gi[k];
            let d_f = dc * cache.c_prev[k];
            dc_prev[k] = dc * gf[k];
            d_act[k] = d_i * gi[k] * (1.0 - gi[k]);
            d_act[h + k] = d_f * gf[k] * (1.0 - gf[k]);
            d_act[2 * h + k] = d_o * go[k] * (1.0 - go[k]);
            d_act[3 * h + k] = d_g * (1.0 - gg[k] * gg[k]);
        }
        let mut dx = vec![0.0; self.input_dim];
        let mut dh_prev = vec![0.0; h];
        for (r, &da) in d_act.iter().enumerate() {
            grads.b[r] += da;
            let gw = grads.w.row_mut(r);
            for (gwv, xv) in gw.iter_mut().zip(&cache.x) {
                *gwv += da * xv;
            }
            let wr = self.w.row(r);
            for (dxv, wv) in dx.iter_mut().zip(wr) {
                *dxv += da * wv;
            }
            let gu = grads.u.row_mut(r);
            for (guv, hv) in gu.iter_mut().zip(&cache.h_prev) {
                *guv += da * hv;
            }
            let ur = self.u.row(r);
            for (dhv, uv) in dh_prev.iter_mut().zip(ur) {
                *dhv += da * uv;
            }
        }
        (dx, dh_prev, dc_prev)
    }
}

/// Final encoder state handed to the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// Decoder recurrent state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// All trainable tensors. The same struct doubles as the gradient
/// container (identical shapes).
#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqParams {
    pub d: usize,
    pub vocab_size: usize,
    pub e_x: Mat,
    pub e_y: Mat,
    pub enc: LstmCell,
    pub dec: LstmCell,
    pub w_out: Mat,
    pub b_out: Vec<f64>,
}

pub const INIT_SCALE: f64 = 0.08;

/// Uniform [-0.08, 0.08] embeddings and recurrent weights from the seeded
/// generator; zero output projection (uniform initial softmax); forget
/// bias +1.
pub fn init_params(d: usize, vocab_size: usize, seed: u64) -> Seq2SeqParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Seq2SeqParams {
        d,
        vocab_size,
        e_x: Mat::uniform(vocab_size, d, INIT_SCALE, &mut rng),
        e_y: Mat::uniform(vocab_size, d, INIT_SCALE, &mut rng),
        enc: LstmCell::init(d, d, INIT_SCALE, &mut rng),
        dec: LstmCell::init(2 * d, d, INIT_SCALE, &mut rng),
        w_out: Mat::zeros(d, vocab_size),
        b_out: vec![0.0; vocab_size],
    }
}

impl Seq2SeqParams {
    pub fn zeros_like(&self) -> Seq2SeqParams {
        Seq2SeqParams {
            d: self.d,
            vocab_size: self.vocab_size,
            e_x: Mat::zeros(self.e_x.rows, self.e_x.cols),
            e_y: Mat::zeros(self.e_y.rows, self.e_y.cols),
            enc: LstmCell::zeros(self.enc.input_dim, self.enc.hidden),
            dec: LstmCell::zeros(self.dec.input_dim, self.dec.hidden),
            w_out: Mat::zeros(self.w_out.rows, self.w_out.cols),
            b_out: vec![0.0; self.b_out.len()],
        }
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 10] {
        [
            ("e_x", &self.e_x.data),
            ("e_y", &self.e_y.data),
            ("enc_w", &self.enc.w.data),
            ("enc_u", &self.enc.u.data),
            ("enc_b", &self.enc.b),
            ("dec_w", &self.dec.w.data),
            ("dec_u", &self.dec.u.data),
            ("dec_b", &self.dec.b),
            ("w_out", &self.w_out.data),
            ("b_out", &self.b_out),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 10] {
        [
            ("e_x", &mut self.e_x.data),
            ("e_y", &mut self.e_y.data),
            ("enc_w", &mut self.enc.w.data),
            ("enc_u", &mut self.enc.u.data),
            ("enc_b", &mut self.enc.b),
            ("dec_w", &mut self.dec.w.data),
            ("dec_u", &mut self.dec.u.data),
            ("dec_b", &mut self.dec.b),
            ("w_out", &mut self.w_out.data),
            ("b_out", &mut self.b_out),
        ]
    }

    pub fn add_assign(&mut self, other: &Seq2SeqParams) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (av, bv) in a.iter_mut().zip(b) {
                *av += bv;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

struct EncodeCache {
    steps: Vec<StepCache>,
    ids: Vec<u32>,
}

fn encode_with_cache(params: &Seq2SeqParams, src_ids: &[u32]) -> (Context, EncodeCache) {
    let d = params.d;
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut steps = Vec::with_capacity(src_ids.len());
    for &id in src_ids {
        let x = params.e_x.row(id as usize);
        let (nh, nc, cache) = params.enc.step(x, &h, &c);
        h = nh;
        c = nc;
        steps.push(cache);
    }
    (
        Context { h, c },
        EncodeCache {
            steps,
            ids: src_ids.to_vec(),
        },
    )
}

/// Runs the encoder left to right from a zero state; empty input yields
/// the zero context.
pub fn encode(params: &Seq2SeqParams, src_ids: &[u32]) -> Context {
    encode_with_cache(params, src_ids).0
}

pub fn initial_dec_state(params: &Seq2SeqParams, context: &Context) -> DecState {
    DecState {
        h: vec![0.0; params.d],
        c: context.c.clone(),
    }
}

fn dec_input(params: &Seq2SeqParams, prev_y: u32, context: &Context) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * params.d);
    x.extend_from_slice(params.e_y.row(prev_y as usize));
    x.extend_from_slice(&context.h);
    x
}

fn output_logits(params: &Seq2SeqParams, s: &[f64]) -> Vec<f64> {
    let mut logits = params.b_out.clone();
    for (r, &sv) in s.iter().enumerate() {
        let row = params.w_out.row(r);
        for (l, wv) in logits.iter_mut().zip(row) {
            *l += sv * wv;
        }
    }
    logits
}

/// One decoder step: input is the previous target embedding concatenated
/// with the encoder context; returns the output logits (softmax of which
/// is the next-token distribution) and the new state.
pub fn decode_step(
    params: &Seq2SeqParams,
    prev_y: u32,
    state: &DecState,
    context: &Context,
) -> (Vec<f64>, DecState) {
    let x = dec_input(params, prev_y, context);
    let (h, c, _) = params.dec.step(&x, &state.h, &state.c);
    let logits = output_logits(params, &h);
    (logits, DecState { h, c })
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Teacher-forcing frames: decoder inputs are [BOS, y..., EOS] and targets
/// are [y..., EOS]; one step per target, so the final input slot is never
/// consumed.
pub fn frame_pair(tgt_ids: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let mut dec_in = Vec::with_capacity(tgt_ids.len() + 2);
    dec_in.push(APE_BOS);
    dec_in.extend_from_slice(tgt_ids);
    dec_in.push(APE_EOS);
    let mut dec_tgt = Vec::with_capacity(tgt_ids.len() + 1);
    dec_tgt.extend_from_slice(tgt_ids);
    dec_tgt.push(APE_EOS);
    (dec_in, dec_tgt)
}

/// A training pair in framed form.
#[derive(Debug, Clone)]
pub struct FramedPair {
    pub src: Vec<u32>,
    pub dec_in: Vec<u32>,
    pub dec_tgt: Vec<u32>,
}

impl FramedPair {
    pub fn new(src: &[u32], tgt: &[u32]) -> Self {
        let (dec_in, dec_tgt) = frame_pair(tgt);
        FramedPair {
            src: src.to_vec(),
            dec_in,
            dec_tgt,
        }
    }
}

fn pair_loss(params: &Seq2SeqParams, pair: &FramedPair) -> f64 {
    let (context, _) = encode_with_cache(params, &pair.src);
    let mut state = initial_dec_state(params, &context);
    let mut loss = 0.0;
    for (t, &gold) in pair.dec_tgt.iter().enumerate() {
        let x = dec_input(params, pair.dec_in[t], &context);
        let (h, c, _) = params.dec.step(&x, &state.h, &state.c);
        state = DecState { h, c };
        if gold == APE_PAD {
            continue;
        }
        let probs = softmax(&output_logits(params, &state.h));
        loss -= probs[gold as usize].ln();
    }
    loss
}

/// Mean-over-pairs teacher-forced negative log likelihood.
pub fn loss_framed(params: &Seq2SeqParams, batch: &[FramedPair]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::param("loss of an empty batch"));
    }
    let total: f64 = batch
        .par_iter()
        .map(|pair| pair_loss(params, pair))
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok(total / batch.len() as f64)
}

pub fn loss(params: &Seq2SeqParams, batch: &[(Vec<u32>, Vec<u32>)]) -> Result<f64> {
    let framed: Vec<FramedPair> = batch
        .iter()
        .map(|(s, t)| FramedPair::new(s, t))
        .collect();
    loss_framed(params, &framed)
}

fn pair_grad(params: &Seq2SeqParams, pair: &FramedPair, grads: &mut Seq2SeqParams) -> f64 {
    let d = params.d;
    let (context, enc_cache) = encode_with_cache(params, &pair.src);

    // Decoder forward with caches.
    let mut state = initial_dec_state(params, &context);
    let mut dec_caches: Vec<StepCache> = Vec::with_capacity(pair.dec_tgt.len());
    let mut step_probs: Vec<Option<Vec<f64>>> = Vec::with_capacity(pair.dec_tgt.len());
    let mut loss = 0.0;
    for (t, &gold) in pair.dec_tgt.iter().enumerate() {
        let x = dec_input(params, pair.dec_in[t], &context);
        let (h, c, cache) = params.dec.step(&x, &state.h, &state.c);
        state = DecState { h: h.clone(), c };
        dec_caches.push(cache);
        if gold == APE_PAD {
            step_probs.push(None);
            continue;
        }
        let probs = softmax(&output_logits(params, &h));
        loss -= probs[gold as usize].ln();
        step_probs.push(Some(probs));
    }

    // Decoder backward.
    let mut dh = vec![0.0; d];
    let mut dc = vec![0.0; d];
    let mut d_ctx_h = vec![0.0; d];
    for t in (0..pair.dec_tgt.len()).rev() {
        if let Some(probs) = &step_probs[t] {
            let mut dz = probs.clone();
            dz[pair.dec_tgt[t] as usize] -= 1.0;
            let s = &dec_caches[t];
            // h of this step = o * tanh(c); recover it from the cache.
            let h_t: Vec<f64> = (0..d)
                .map(|k| s.gates[2 * d + k] * s.tanh_c[k])
                .collect();
            for (r, &hv) in h_t.iter().enumerate() {
                let row = grads.w_out.row_mut(r);
                for (gw, &dzv) in row.iter_mut().zip(&dz) {
                    *gw += hv * dzv;
                }
            }
            for (gb, &dzv) in grads.b_out.iter_mut().zip(&dz) {
                *gb += dzv;
            }
            for (r, dhv) in dh.iter_mut().enumerate() {
                let row = params.w_out.row(r);
                let mut sum = 0.0;
                for (wv, dzv) in row.iter().zip(&dz) {
                    sum += wv * dzv;
                }
                *dhv += sum;
            }
        }
        let (dx, dh_prev, dc_prev) =
            params
                .dec
                .step_backward(&dec_caches[t], &dh, &dc, &mut grads.dec);
        // Split the input gradient: embedding row, then context h.
        let prev_y = pair.dec_in[t] as usize;
        for (g, &dxv) in grads.e_y.row_mut(prev_y).iter_mut().zip(&dx[..d]) {
            *g += dxv;
        }
        for (acc, &dxv) in d_ctx_h.iter_mut().zip(&dx[d..]) {
            *acc += dxv;
        }
        dh = dh_prev;
        dc = dc_prev;
    }
    // dh at t=0 hits the zero initial decoder hidden state (no params);
    // dc at t=0 flows into the encoder's final cell state.
    let mut enc_dh = d_ctx_h;
    let mut enc_dc = dc;

    // Encoder backward.
    for (t, cache) in enc_cache.steps.iter().enumerate().rev() {
        let (dx, dh_prev, dc_prev) =
            params
                .enc
                .step_backward(cache, &enc_dh, &enc_dc, &mut grads.enc);
        let id = enc_cache.ids[t] as usize;
        for (g, &dxv) in grads.e_x.row_mut(id).iter_mut().zip(&dx) {
            *g += dxv;
        }
        enc_dh = dh_prev;
        enc_dc = dc_prev;
    }
    loss
}

/// Exact gradient of the batch loss by reverse accumulation; returns
/// (loss, gradients).
pub fn grad_framed(
    params: &Seq2SeqParams,
    batch: &[FramedPair],
) -> Result<(f64, Seq2SeqParams)> {
    if batch.is_empty() {
        return Err(Error::param("gradient of an empty batch"));
    }
    // Fixed-size chunks keep the accumulation order independent of the
    // worker count.
    const CHUNK: usize = 8;
    let partials: Vec<(f64, Seq2SeqParams)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = params.zeros_like();
            let mut loss = 0.0;
            for pair in chunk {
                loss += pair_grad(params, pair, &mut grads);
            }
            (loss, grads)
        })
        .collect();

    let mut total_loss = 0.0;
    let mut grads = params.zeros_like();
    for (l, g) in partials {
        total_loss += l;
        grads.add_assign(&g);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((total_loss * inv, grads))
}

pub fn grad(
    params: &Seq2SeqParams,
    batch: &[(Vec<u32>, Vec<u32>)],
) -> Result<(f64, Seq2SeqParams)> {
    let framed: Vec<FramedPair> = batch
        .iter()
        .map(|(s, t)| FramedPair::new(s, t))
        .collect();
    grad_framed(params, &framed)
}

/// Greedy decoding: argmax from BOS until EOS or `max_len`. UNK outputs
/// copy the same-position source token when one exists and are dropped
/// otherwise.
pub fn translate(
    params: &Seq2SeqParams,
    src: &Sentence,
    vocab: &ApeVocab,
    max_len: usize,
) -> Sentence {
    let src_ids = vocab.map_sentence(src);
    let context = encode(params, &src_ids);
    let mut state = initial_dec_state(params, &context);
    let mut prev = APE_BOS;
    let mut out: Vec<String> = Vec::new();
    for pos in 0..max_len {
        let (logits, next) = decode_step(params, prev, &state, &context);
        state = next;
        let best = logits
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.total_cmp(b).then_with(|| j.cmp(i)))
            .map(|(i, _)| i as u32)
            .expect("non-empty vocabulary");
        if best == APE_EOS {
            break;
        }
        if best == APE_UNK {
            if let Some(tok) = src.tokens.get(pos) {
                out.push(tok.as_str().to_string());
            }
        } else {
            out.push(vocab.word(best).to_string());
        }
        prev = best;
    }
    Sentence::from_line(&out.join(" "))
}
