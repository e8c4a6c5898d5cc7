//! Phrase-based stack (beam) decoding over a log-linear model: phrase
//! features, n-gram LM, linear distortion and word penalty, with
//! future-cost estimation, histogram/threshold pruning and hypothesis
//! recombination.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{NgramModel, BOS, EOS};
use crate::phrase::PhraseTable;
use crate::text::Sentence;

/// Per-feature floor used for OOV pass-through options (log10 of 1e-7).
pub const OOV_FEATURE_LOG10: f64 = -7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderWeights {
    pub phi_tgt_given_src: f64,
    pub phi_src_given_tgt: f64,
    pub lex_tgt_given_src: f64,
    pub lex_src_given_tgt: f64,
    pub lm: f64,
    pub distortion: f64,
    pub word_penalty: f64,
}

impl Default for DecoderWeights {
    fn default() -> Self {
        DecoderWeights {
            phi_tgt_given_src: 0.2,
            phi_src_given_tgt: 0.2,
            lex_tgt_given_src: 0.1,
            lex_src_given_tgt: 0.1,
            lm: 0.5,
            distortion: 0.3,
            word_penalty: -0.1,
        }
    }
}

impl DecoderWeights {
    fn phrase_score(&self, feature_log10: &[f64; 4]) -> f64 {
        self.phi_tgt_given_src * feature_log10[0]
            + self.phi_src_given_tgt * feature_log10[1]
            + self.lex_tgt_given_src * feature_log10[2]
            + self.lex_src_given_tgt * feature_log10[3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderConfig {
    /// Histogram pruning limit per stack.
    pub stack_size: usize,
    /// Threshold pruning margin in log10 units against each stack's best.
    pub beam_threshold: f64,
    /// Per-step distortion limit; -1 means unlimited.
    pub distortion_limit: i64,
    pub weights: DecoderWeights,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            stack_size: 100,
            beam_threshold: 5.0,
            distortion_limit: 6,
            weights: DecoderWeights::default(),
        }
    }
}

/// One translation option for a source span.
#[derive(Debug, Clone)]
pub struct SpanOption {
    pub tgt: Vec<String>,
    pub feature_log10: [f64; 4],
    pub oov: bool,
}

/// Translation options per source span (half-open), including OOV
/// pass-through for tokens the table does not cover.
#[derive(Debug, Clone)]
pub struct OptionGrid {
    pub n: usize,
    options: HashMap<(usize, usize), Vec<SpanOption>>,
}

impl OptionGrid {
    pub fn from_options(n: usize, options: HashMap<(usize, usize), Vec<SpanOption>>) -> Self {
        OptionGrid { n, options }
    }

    pub fn options(&self, span: (usize, usize)) -> &[SpanOption] {
        self.options.get(&span).map_or(&[], Vec::as_slice)
    }

    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |s| (s + 1..=n).map(move |e| (s, e)))
    }
}

pub fn collect_options(sentence: &Sentence, table: &PhraseTable) -> OptionGrid {
    let n = sentence.len();
    let words = sentence.surfaces();
    let mut options: HashMap<(usize, usize), Vec<SpanOption>> = HashMap::new();
    for s in 0..n {
        for e in s + 1..=n {
            let phrase = words[s..e].join(" ");
            let entries = table.lookup(&phrase);
            let mut opts: Vec<SpanOption> = entries
                .iter()
                .map(|entry| SpanOption {
                    tgt: entry.tgt.split(' ').map(str::to_string).collect(),
                    feature_log10: entry.scores().map(f64::log10),
                    oov: false,
                })
                .collect();
            if e - s == 1 && opts.is_empty() {
                opts.push(SpanOption {
                    tgt: vec![words[s].to_string()],
                    feature_log10: [OOV_FEATURE_LOG10; 4],
                    oov: true,
                });
            }
            if !opts.is_empty() {
                options.insert((s, e), opts);
            }
        }
    }
    OptionGrid { n, options }
}

/// Admissible-style span estimates: best weighted phrase score plus a
/// context-free (unigram backoff) LM estimate and the word penalty,
/// combined over split points by dynamic programming. Unreachable spans
/// stay at -inf.
#[derive(Debug, Clone)]
pub struct FutureCost {
    n: usize,
    /// cost[s][e - s - 1] for half-open spans (s, e).
    cost: Vec<Vec<f64>>,
}

impl FutureCost {
    pub fn get(&self, span: (usize, usize)) -> f64 {
        self.cost[span.0][span.1 - span.0 - 1]
    }

    /// Sum over the maximal uncovered runs of the coverage bitset.
    fn of_coverage(&self, coverage: &Coverage) -> f64 {
        let mut total = 0.0;
        let mut run_start: Option<usize> = None;
        for i in 0..=self.n {
            let covered = i == self.n || coverage.covered(i);
            match (covered, run_start) {
                (false, None) => run_start = Some(i),
                (true, Some(s)) => {
                    total += self.get((s, i));
                    run_start = None;
                }
                _ => {}
            }
        }
        total
    }
}

pub fn future_cost(
    grid: &OptionGrid,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> FutureCost {
    let n = grid.n;
    let w = &config.weights;
    let mut cost = vec![vec![f64::NEG_INFINITY; n]; n];
    for len in 1..=n {
        for s in 0..=n - len {
            let e = s + len;
            let mut best = f64::NEG_INFINITY;
            for opt in grid.options((s, e)) {
                let mut score = w.phrase_score(&opt.feature_log10);
                for tok in &opt.tgt {
                    let id = lm.vocab().id_or_unk(tok);
                    score += w.lm * lm.logprob(&[], id).expect("empty context");
                }
                score += w.word_penalty * opt.tgt.len() as f64;
                best = best.max(score);
            }
            for split in s + 1..e {
                let combined = cost[s][split - s - 1] + cost[split][e - split - 1];
                best = best.max(combined);
            }
            cost[s][len - 1] = best;
        }
    }
    FutureCost { n, cost }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Coverage {
    bits: Vec<u64>,
    count: usize,
}

impl Coverage {
    fn new(n: usize) -> Self {
        Coverage {
            bits: vec![0; n.div_ceil(64).max(1)],
            count: 0,
        }
    }

    fn covered(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn overlaps(&self, span: (usize, usize)) -> bool {
        (span.0..span.1).any(|i| self.covered(i))
    }

    fn cover(&mut self, span: (usize, usize)) {
        for i in span.0..span.1 {
            debug_assert!(!self.covered(i));
            self.bits[i / 64] |= 1 << (i % 64);
        }
        self.count += span.1 - span.0;
    }

    fn first_gap(&self, n: usize) -> Option<usize> {
        (0..n).find(|&i| !self.covered(i))
    }
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub span: (usize, usize),
    pub tgt: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Translation {
    pub tokens: Vec<String>,
    pub model_score: f64,
    pub segmentation: Vec<Segment>,
}

/// Per-stack diagnostics: coverage cardinality, stack size after pruning,
/// and the best (accumulated + future) score.
#[derive(Debug, Clone, Copy)]
pub struct StackTrace {
    pub cardinality: usize,
    pub size: usize,
    pub best: f64,
}

impl StackTrace {
    pub fn line(&self) -> String {
        format!("{}\t{}\t{:.6}", self.cardinality, self.size, self.best)
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    coverage: Coverage,
    last_end: i64,
    lm_state: Vec<u32>,
    output: Vec<String>,
    segmentation: Vec<Segment>,
    accumulated: f64,
}

/// Hypotheses agreeing on all three fields expand identically.
type RecombinationKey = (Vec<u64>, Vec<u32>, i64);

/// Weighted log-linear score of a fixed segmentation (given in the order
/// the phrases were applied). The segmentation must partition the source.
pub fn score_hypothesis(
    source: &Sentence,
    segmentation: &[Segment],
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> Result<f64> {
    let n = source.len();
    let mut seen = vec![false; n];
    for seg in segmentation {
        if seg.span.1 > n || seg.span.0 >= seg.span.1 {
            return Err(Error::param(format!("bad span {:?}", seg.span)));
        }
        for (offset, flag) in seen[seg.span.0..seg.span.1].iter_mut().enumerate() {
            if *flag {
                return Err(Error::param(format!(
                    "position {} covered twice",
                    seg.span.0 + offset
                )));
            }
            *flag = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::param("segmentation does not cover the source"));
    }

    let w = &config.weights;
    let words = source.surfaces();
    let mut score = 0.0;
    let mut last_end: i64 = -1;
    let mut target: Vec<&str> = Vec::new();
    for seg in segmentation {
        let src_phrase = words[seg.span.0..seg.span.1].join(" ");
        let tgt_phrase = seg.tgt.join(" ");
        let features = table
            .lookup(&src_phrase)
            .iter()
            .find(|e| e.tgt == tgt_phrase)
            .map(|e| e.scores().map(f64::log10))
            .unwrap_or([OOV_FEATURE_LOG10; 4]);
        score += w.phrase_score(&features);
        score += w.distortion * -((seg.span.0 as i64 - last_end - 1).abs() as f64);
        last_end = seg.span.1 as i64 - 1;
        target.extend(seg.tgt.iter().map(String::as_str));
    }
    let ids: Vec<u32> = target.iter().map(|t| lm.vocab().id_or_unk(t)).collect();
    score += w.lm * lm.ids_logprob(&ids);
    score += w.word_penalty * target.len() as f64;
    Ok(score)
}

pub fn decode(
    sentence: &Sentence,
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> Result<Translation> {
    decode_with_trace(sentence, table, lm, config).map(|(t, _)| t)
}

pub fn decode_with_trace(
    sentence: &Sentence,
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> Result<(Translation, Vec<StackTrace>)> {
    if sentence.is_empty() {
        return Ok((
            Translation {
                tokens: Vec::new(),
                model_score: 0.0,
                segmentation: Vec::new(),
            },
            Vec::new(),
        ));
    }
    let grid = collect_options(sentence, table);
    let fc = future_cost(&grid, lm, config);

    let mut trace = Vec::new();
    if let Some(t) = search(&grid, &fc, lm, config, false, &mut trace)? {
        return Ok((t, trace));
    }
    // The distortion limit can strand positions on adversarial inputs;
    // monotone coverage always completes because every position has at
    // least a pass-through option.
    let mut trace = Vec::new();
    let t = search(&grid, &fc, lm, config, true, &mut trace)?
        .expect("monotone search always completes");
    Ok((t, trace))
}

fn search(
    grid: &OptionGrid,
    fc: &FutureCost,
    lm: &NgramModel,
    config: &DecoderConfig,
    monotone: bool,
    trace: &mut Vec<StackTrace>,
) -> Result<Option<Translation>> {
    let n = grid.n;
    let w = &config.weights;
    let ctx_len = lm.order() - 1;

    let initial = Hyp {
        coverage: Coverage::new(n),
        last_end: -1,
        lm_state: vec![BOS; ctx_len],
        output: Vec::new(),
        segmentation: Vec::new(),
        accumulated: 0.0,
    };
    let mut stacks: Vec<Vec<Hyp>> = (0..=n).map(|_| Vec::new()).collect();
    let mut keys: Vec<HashMap<RecombinationKey, usize>> =
        (0..=n).map(|_| HashMap::new()).collect();
    stacks[0].push(initial);

    for cardinality in 0..=n {
        prune(&mut stacks[cardinality], fc, config);
        if let Some(best) = stacks[cardinality].first() {
            trace.push(StackTrace {
                cardinality,
                size: stacks[cardinality].len(),
                best: best.accumulated + fc.of_coverage(&best.coverage),
            });
        }
        if cardinality == n {
            break;
        }

        for h_idx in 0..stacks[cardinality].len() {
            for (s, e) in grid.spans() {
                let hyp = &stacks[cardinality][h_idx];
                if grid.options((s, e)).is_empty() || hyp.coverage.overlaps((s, e)) {
                    continue;
                }
                if monotone {
                    if Some(s) != hyp.coverage.first_gap(n) {
                        continue;
                    }
                } else if config.distortion_limit >= 0 {
                    let step = (s as i64 - hyp.last_end - 1).abs();
                    if step > config.distortion_limit {
                        continue;
                    }
                }

                // Feasibility: the jump back to the leftmost gap after
                // applying this phrase must itself respect the limit.
                let mut new_cov = stacks[cardinality][h_idx].coverage.clone();
                new_cov.cover((s, e));
                if !monotone && config.distortion_limit >= 0 {
                    if let Some(gap) = new_cov.first_gap(n) {
                        if (e as i64 - gap as i64).abs() > config.distortion_limit {
                            continue;
                        }
                    }
                }

                for opt_idx in 0..grid.options((s, e)).len() {
                    let hyp = &stacks[cardinality][h_idx];
                    let opt = &grid.options((s, e))[opt_idx];
                    let mut acc = hyp.accumulated;
                    acc += w.phrase_score(&opt.feature_log10);
                    acc += w.distortion * -((s as i64 - hyp.last_end - 1).abs() as f64);
                    acc += w.word_penalty * opt.tgt.len() as f64;

                    let mut lm_state = hyp.lm_state.clone();
                    for tok in &opt.tgt {
                        let id = lm.vocab().id_or_unk(tok);
                        acc += w.lm * lm.logprob(&lm_state, id).expect("bounded context");
                        if ctx_len > 0 {
                            if lm_state.len() == ctx_len {
                                lm_state.remove(0);
                            }
                            lm_state.push(id);
                        }
                    }

                    let complete = new_cov.count == n;
                    if complete {
                        acc += w.lm * lm.logprob(&lm_state, EOS).expect("bounded context");
                    }

                    let hyp = &stacks[cardinality][h_idx];
                    let mut output = hyp.output.clone();
                    output.extend(opt.tgt.iter().cloned());
                    let mut segmentation = hyp.segmentation.clone();
                    segmentation.push(Segment {
                        span: (s, e),
                        tgt: opt.tgt.clone(),
                    });
                    let new_hyp = Hyp {
                        coverage: new_cov.clone(),
                        last_end: e as i64 - 1,
                        lm_state,
                        output,
                        segmentation,
                        accumulated: acc,
                    };

                    // Recombination: same coverage, LM state and last end
                    // expand identically; keep the better score.
                    let key = (
                        new_hyp.coverage.bits.clone(),
                        new_hyp.lm_state.clone(),
                        new_hyp.last_end,
                    );
                    let stack_idx = new_hyp.coverage.count;
                    match keys[stack_idx].get(&key) {
                        Some(&at) => {
                            if new_hyp.accumulated > stacks[stack_idx][at].accumulated {
                                stacks[stack_idx][at] = new_hyp;
                            }
                        }
                        None => {
                            keys[stack_idx].insert(key, stacks[stack_idx].len());
                            stacks[stack_idx].push(new_hyp);
                        }
                    }
                }
            }
        }
    }

    let done = &mut stacks[n];
    if done.is_empty() {
        return Ok(None);
    }
    let best = done
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.accumulated
                .total_cmp(&b.accumulated)
                .then_with(|| j.cmp(i))
        })
        .map(|(i, _)| i)
        .expect("non-empty final stack");
    let hyp = done.swap_remove(best);
    Ok(Some(Translation {
        tokens: hyp.output,
        model_score: hyp.accumulated,
        segmentation: hyp.segmentation,
    }))
}

/// Threshold then histogram pruning by accumulated + future score; sorts
/// the stack best-first with stable index tie-breaking.
fn prune(stack: &mut Vec<Hyp>, fc: &FutureCost, config: &DecoderConfig) {
    if stack.is_empty() {
        return;
    }
    let mut scored: Vec<(f64, usize)> = stack
        .iter()
        .enumerate()
        .map(|(i, h)| (h.accumulated + fc.of_coverage(&h.coverage), i))
        .collect();
    scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let best = scored[0].0;
    let keep: Vec<usize> = scored
        .iter()
        .take(config.stack_size)
        .filter(|(score, _)| best - score <= config.beam_threshold || *score == best)
        .map(|&(_, i)| i)
        .collect();
    let mut old: Vec<Option<Hyp>> = stack.drain(..).map(Some).collect();
    for i in keep {
        stack.push(old[i].take().expect("kept index unique"));
    }
}
