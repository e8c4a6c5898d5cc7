//! Backoff n-gram language model with modified Kneser-Ney smoothing.
//!
//! Counting pads each sentence with `order-1` BOS markers and one EOS.
//! Windows ending inside the BOS padding are not counted, so `<s>` never
//! appears as a predicted token. Lower orders are estimated from
//! continuation counts (grams beginning with `<s>` keep their raw counts),
//! interpolated, and folded into the usual ARPA backoff representation:
//! for every stored context `c`, `sum_w P(w|c) = 1` over the predictable
//! vocabulary (everything except `<s>`).

mod arpa;

pub use arpa::{read_arpa, write_arpa};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::Sentence;

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const UNK: u32 = 2;

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Log10 probability assigned to entries that exist only as backoff
/// contexts (the BOS n-grams); mirrors the ARPA convention.
pub const SENTINEL_LOG10: f64 = -99.0;

/// A string <-> id bijection with fixed reserved ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Vocab {
            words: Vec::new(),
            ids: HashMap::new(),
        };
        for w in [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN] {
            v.insert(w);
        }
        v
    }

    /// Builds a vocabulary over every token in the corpus, ids assigned in
    /// first-occurrence order after the reserved entries.
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut v = Vocab::new();
        for sent in sentences {
            for tok in &sent.tokens {
                v.insert(tok.as_str());
            }
        }
        v
    }

    pub fn insert(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn id_or_unk(&self, word: &str) -> u32 {
        self.id_of(word).unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn map_sentence(&self, sentence: &Sentence) -> Vec<u32> {
        sentence
            .tokens
            .iter()
            .map(|t| self.id_or_unk(t.as_str()))
            .collect()
    }
}

/// Raw n-gram counts for orders `1..=order`.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    pub order: usize,
    /// counts[m-1] holds the m-gram map.
    pub counts: Vec<HashMap<Vec<u32>, u64>>,
}

impl NgramCounts {
    pub fn get(&self, gram: &[u32]) -> u64 {
        self.counts[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }
}

/// Counts all n-grams of lengths `1..=order` over BOS/EOS-padded sentences.
/// Windows that end on a BOS marker are skipped.
pub fn count_ngrams(corpus: &[Sentence], vocab: &Vocab, order: usize) -> Result<NgramCounts> {
    if order < 1 {
        return Err(Error::param("n-gram order must be >= 1"));
    }
    let mut counts = vec![HashMap::new(); order];
    for sent in corpus {
        let mut ids = Vec::with_capacity(sent.len() + order);
        ids.extend(std::iter::repeat_n(BOS, order - 1));
        ids.extend(vocab.map_sentence(sent));
        ids.push(EOS);
        for n in 1..=order {
            for window in ids.windows(n) {
                if *window.last().expect("n >= 1") == BOS {
                    continue;
                }
                *counts[n - 1].entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }
    Ok(NgramCounts { order, counts })
}

const FALLBACK_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, Copy)]
struct Discounts {
    d1: f64,
    d2: f64,
    d3plus: f64,
    fallback: bool,
}

impl Discounts {
    fn for_count(&self, c: u64) -> f64 {
        match c {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}

/// Discounts from count-of-counts: D_k = k - (k+1) * Y * n_{k+1} / n_k with
/// Y = n_1 / (n_1 + 2 n_2). Degenerate statistics fall back to a flat 0.75.
fn compute_discounts(adjusted: &HashMap<Vec<u32>, u64>) -> Discounts {
    let mut n = [0u64; 4];
    let mut has3plus = false;
    for &c in adjusted.values() {
        if (1..=4).contains(&c) {
            n[(c - 1) as usize] += 1;
        }
        if c >= 3 {
            has3plus = true;
        }
    }
    let fallback = Discounts {
        d1: FALLBACK_DISCOUNT,
        d2: FALLBACK_DISCOUNT,
        d3plus: FALLBACK_DISCOUNT,
        fallback: true,
    };
    let [n1, n2, n3, n4] = n.map(|x| x as f64);
    if n1 == 0.0 || n2 == 0.0 {
        return fallback;
    }
    let y = n1 / (n1 + 2.0 * n2);
    let d1 = 1.0 - 2.0 * y * n2 / n1;
    let d2 = 2.0 - 3.0 * y * n3 / n2;
    let d3plus = if has3plus {
        if n3 == 0.0 {
            return fallback;
        }
        3.0 - 4.0 * y * n4 / n3
    } else {
        0.0
    };
    if !(d1 >= 0.0 && d2 >= 0.0 && d3plus >= 0.0) {
        return fallback;
    }
    Discounts {
        d1,
        d2,
        d3plus,
        fallback: false,
    }
}

struct BuildEntry {
    /// Interpolated probability; `None` for pure backoff contexts.
    prob: Option<f64>,
    backoff: f64,
}

/// One order of the model: reversed n-grams in a flat sorted array with
/// parallel probability/backoff columns (binary-searched on lookup).
#[derive(Debug, Clone)]
struct Level {
    n: usize,
    keys: Vec<u32>,
    log_probs: Vec<f64>,
    /// Empty at the highest order.
    log_backoffs: Vec<f64>,
}

impl Level {
    fn len(&self) -> usize {
        self.log_probs.len()
    }

    fn key(&self, i: usize) -> &[u32] {
        &self.keys[i * self.n..(i + 1) * self.n]
    }

    fn find_rev(&self, rev_key: &[u32]) -> Option<usize> {
        debug_assert_eq!(rev_key.len(), self.n);
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.key(mid) < rev_key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo < self.len() && self.key(lo) == rev_key).then_some(lo)
    }
}

fn reversed(gram: &[u32]) -> Vec<u32> {
    gram.iter().rev().copied().collect()
}

/// An estimated backoff model. Immutable after construction; queries are
/// safe from any number of threads.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    vocab: Vocab,
    levels: Vec<Level>,
    /// Orders where the discount computation fell back to 0.75.
    pub fallback_orders: Vec<usize>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn ngram_count(&self, n: usize) -> usize {
        self.levels[n - 1].len()
    }

    /// Iterates stored n-grams of order `n` in forward token order:
    /// `(gram, log10_prob, log10_backoff)`.
    pub fn entries(&self, n: usize) -> impl Iterator<Item = (Vec<u32>, f64, Option<f64>)> + '_ {
        let level = &self.levels[n - 1];
        let top = n == self.order;
        (0..level.len()).map(move |i| {
            (
                reversed(level.key(i)),
                level.log_probs[i],
                (!top).then(|| level.log_backoffs[i]),
            )
        })
    }

    fn stored(&self, gram: &[u32]) -> Option<(f64, f64)> {
        let level = &self.levels[gram.len() - 1];
        level.find_rev(&reversed(gram)).map(|i| {
            let b = if gram.len() == self.order {
                0.0
            } else {
                level.log_backoffs[i]
            };
            (level.log_probs[i], b)
        })
    }

    /// Log10 probability of `word` after `context` via backoff recursion.
    pub fn logprob(&self, context: &[u32], word: u32) -> Result<f64> {
        if context.len() > self.order - 1 {
            return Err(Error::param(format!(
                "context length {} exceeds order-1 = {}",
                context.len(),
                self.order - 1
            )));
        }
        let mut backoff_sum = 0.0;
        for k in (0..=context.len()).rev() {
            let ctx = &context[context.len() - k..];
            let mut gram = Vec::with_capacity(k + 1);
            gram.extend_from_slice(ctx);
            gram.push(word);
            if let Some((p, _)) = self.stored(&gram) {
                return Ok(backoff_sum + p);
            }
            if k > 0 {
                if let Some((_, b)) = self.stored(ctx) {
                    backoff_sum += b;
                }
            }
        }
        // Word outside the stored vocabulary: score as UNK.
        let (p, _) = self.stored(&[UNK]).expect("UNK unigram always stored");
        Ok(backoff_sum + p)
    }

    /// Total log10 probability of the sentence with BOS padding and a
    /// terminal EOS.
    pub fn sentence_logprob(&self, sentence: &Sentence) -> f64 {
        let ids = self.vocab.map_sentence(sentence);
        self.ids_logprob(&ids)
    }

    pub fn ids_logprob(&self, ids: &[u32]) -> f64 {
        let ctx_len = self.order - 1;
        let mut context: Vec<u32> = vec![BOS; ctx_len];
        let mut total = 0.0;
        for &id in ids.iter().chain(std::iter::once(&EOS)) {
            total += self
                .logprob(&context, id)
                .expect("context bounded by order-1");
            if ctx_len > 0 {
                if context.len() == ctx_len {
                    context.remove(0);
                }
                context.push(id);
            }
        }
        total
    }

    /// `10^(-total_log10 / predicted_tokens)`; EOS predictions count, BOS
    /// padding does not.
    pub fn perplexity(&self, corpus: &[Sentence]) -> Result<f64> {
        if corpus.is_empty() {
            return Err(Error::param("perplexity of an empty corpus"));
        }
        let mut total = 0.0;
        let mut tokens = 0usize;
        for sent in corpus {
            total += self.sentence_logprob(sent);
            tokens += sent.len() + 1;
        }
        Ok(10f64.powf(-total / tokens as f64))
    }

    pub(crate) fn from_entries(
        order: usize,
        vocab: Vocab,
        mut raw_levels: Vec<Vec<(Vec<u32>, f64, f64)>>,
        fallback_orders: Vec<usize>,
    ) -> Self {
        let mut levels = Vec::with_capacity(order);
        for (idx, entries) in raw_levels.iter_mut().enumerate() {
            let n = idx + 1;
            let mut tagged: Vec<(Vec<u32>, f64, f64)> = entries
                .drain(..)
                .map(|(gram, p, b)| (reversed(&gram), p, b))
                .collect();
            tagged.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            let mut keys = Vec::with_capacity(tagged.len() * n);
            let mut log_probs = Vec::with_capacity(tagged.len());
            let mut log_backoffs = Vec::new();
            for (key, p, b) in tagged {
                keys.extend_from_slice(&key);
                log_probs.push(p);
                if n < order {
                    log_backoffs.push(b);
                }
            }
            levels.push(Level {
                n,
                keys,
                log_probs,
                log_backoffs,
            });
        }
        NgramModel {
            order,
            vocab,
            levels,
            fallback_orders,
        }
    }
}

/// Estimates an interpolated modified Kneser-Ney model from raw counts and
/// stores it in backoff form.
pub fn estimate_kn(counts: &NgramCounts, vocab: Vocab) -> Result<NgramModel> {
    let order = counts.order;
    if counts.counts[0].is_empty() {
        return Err(Error::param("cannot estimate a model from empty counts"));
    }

    // Adjusted counts: raw at the highest order and for BOS-initial grams,
    // continuation counts (distinct predecessors) elsewhere.
    let mut adjusted: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
    adjusted[order - 1] = counts.counts[order - 1].clone();
    for m in (1..order).rev() {
        let mut adj: HashMap<Vec<u32>, u64> = HashMap::new();
        for (gram, &raw) in &counts.counts[m - 1] {
            if gram[0] == BOS {
                adj.insert(gram.clone(), raw);
            }
        }
        for higher in adjusted[m].keys() {
            let suffix = &higher[1..];
            if suffix[0] != BOS {
                *adj.entry(suffix.to_vec()).or_insert(0) += 1;
            }
        }
        debug_assert_eq!(
            {
                let mut a: Vec<_> = adj.keys().collect();
                a.sort();
                a
            },
            {
                let mut r: Vec<_> = counts.counts[m - 1].keys().collect();
                r.sort();
                r
            },
            "adjusted counts must cover exactly the counted {m}-grams"
        );
        adjusted[m - 1] = adj;
    }
    // UNK participates in the unigram distribution with count zero.
    adjusted[0].entry(vec![UNK]).or_insert(0);

    let mut fallback_orders = Vec::new();
    let discounts: Vec<Discounts> = adjusted
        .iter()
        .enumerate()
        .map(|(idx, adj)| {
            let d = compute_discounts(adj);
            if d.fallback {
                fallback_orders.push(idx + 1);
            }
            d
        })
        .collect();

    // entries[m-1]: interpolated probabilities plus backoff weights.
    let mut entries: Vec<HashMap<Vec<u32>, BuildEntry>> = Vec::with_capacity(order);

    // Unigrams interpolate with the uniform distribution over the
    // predictable vocabulary (every unigram entry; BOS is excluded).
    {
        let adj = &adjusted[0];
        let d = discounts[0];
        let total: u64 = adj.values().sum();
        let total = total as f64;
        let v_pred = adj.len() as f64;
        let mut gamma_num = 0.0;
        for &c in adj.values() {
            gamma_num += d.for_count(c);
        }
        let gamma = gamma_num / total;
        let mut level: HashMap<Vec<u32>, BuildEntry> = HashMap::with_capacity(adj.len() + 1);
        for (gram, &c) in adj {
            let discounted = (c as f64 - d.for_count(c)).max(0.0) / total;
            level.insert(
                gram.clone(),
                BuildEntry {
                    prob: Some(discounted + gamma / v_pred),
                    backoff: 1.0,
                },
            );
        }
        if order > 1 {
            level.insert(
                vec![BOS],
                BuildEntry {
                    prob: None,
                    backoff: 1.0,
                },
            );
        }
        entries.push(level);
    }

    for m in 2..=order {
        let adj = &adjusted[m - 1];
        let d = discounts[m - 1];

        // Group grams by context.
        let mut by_context: HashMap<&[u32], Vec<(&[u32], u64)>> = HashMap::new();
        for (gram, &c) in adj {
            by_context
                .entry(&gram[..m - 1])
                .or_default()
                .push((gram.as_slice(), c));
        }

        let mut level: HashMap<Vec<u32>, BuildEntry> = HashMap::with_capacity(adj.len());
        for (context, grams) in &by_context {
            let total: u64 = grams.iter().map(|(_, c)| *c).sum();
            let total = total as f64;
            let gamma_num: f64 = grams.iter().map(|(_, c)| d.for_count(*c)).sum();
            let gamma = gamma_num / total;
            for (gram, c) in grams {
                let lower = entries[m - 2]
                    .get(&gram[1..])
                    .and_then(|e| e.prob)
                    .expect("suffix of a counted gram is counted");
                let discounted = (*c as f64 - d.for_count(*c)).max(0.0) / total;
                level.insert(
                    gram.to_vec(),
                    BuildEntry {
                        prob: Some(discounted + gamma * lower),
                        backoff: 1.0,
                    },
                );
            }
            // The backoff weight lives on the context's own entry one
            // order down; BOS runs exist only as contexts.
            let ctx_entry = entries[m - 2].entry(context.to_vec()).or_insert(BuildEntry {
                prob: None,
                backoff: 1.0,
            });
            debug_assert!(
                ctx_entry.prob.is_some() || context.iter().all(|&t| t == BOS),
                "only BOS runs may appear as pure contexts"
            );
            ctx_entry.backoff = gamma;
        }
        entries.push(level);
    }

    let raw_levels = entries
        .into_iter()
        .map(|level| {
            level
                .into_iter()
                .map(|(gram, e)| {
                    let p = e.prob.map_or(SENTINEL_LOG10, f64::log10);
                    (gram, p, e.backoff.log10())
                })
                .collect()
        })
        .collect();

    Ok(NgramModel::from_entries(
        order,
        vocab,
        raw_levels,
        fallback_orders,
    ))
}
