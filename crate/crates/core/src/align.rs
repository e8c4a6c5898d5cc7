//! IBM Model 1 lexical translation via EM, Viterbi alignment, and
//! grow-diag-final symmetrization.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::text::ParallelCorpus;

pub const NULL_TOKEN: &str = "NULL";

/// Floor for unseen table entries and inside logs.
pub const EPSILON: f64 = 1e-12;

/// Lexical translation probabilities t(target | source). Source id 0 is
/// the NULL token; every source row sums to 1 over its stored support.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalTable {
    src_words: Vec<String>,
    tgt_words: Vec<String>,
    src_ids: HashMap<String, u32>,
    tgt_ids: HashMap<String, u32>,
    t: HashMap<(u32, u32), f64>,
}

impl LexicalTable {
    fn empty() -> Self {
        let mut table = LexicalTable {
            src_words: Vec::new(),
            tgt_words: Vec::new(),
            src_ids: HashMap::new(),
            tgt_ids: HashMap::new(),
            t: HashMap::new(),
        };
        table.intern_src(NULL_TOKEN);
        table
    }

    fn intern_src(&mut self, w: &str) -> u32 {
        intern(&mut self.src_words, &mut self.src_ids, w)
    }

    fn intern_tgt(&mut self, w: &str) -> u32 {
        intern(&mut self.tgt_words, &mut self.tgt_ids, w)
    }

    pub fn src_id(&self, w: &str) -> Option<u32> {
        self.src_ids.get(w).copied()
    }

    pub fn tgt_id(&self, w: &str) -> Option<u32> {
        self.tgt_ids.get(w).copied()
    }

    /// t(tgt | src) with the epsilon floor for unseen entries.
    pub fn prob(&self, src: u32, tgt: u32) -> f64 {
        self.t.get(&(src, tgt)).copied().unwrap_or(EPSILON)
    }

    pub fn prob_str(&self, src: &str, tgt: &str) -> f64 {
        match (self.src_id(src), self.tgt_id(tgt)) {
            (Some(f), Some(e)) => self.prob(f, e),
            _ => EPSILON,
        }
    }

    /// Entries as (src, tgt, prob) sorted by surface forms.
    pub fn entries(&self) -> Vec<(&str, &str, f64)> {
        let mut out: Vec<(&str, &str, f64)> = self
            .t
            .iter()
            .map(|(&(f, e), &p)| {
                (
                    self.src_words[f as usize].as_str(),
                    self.tgt_words[e as usize].as_str(),
                    p,
                )
            })
            .collect();
        out.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Builds a table directly from (src, tgt, prob) triples.
    pub fn from_entries(entries: &[(&str, &str, f64)]) -> LexicalTable {
        let mut table = LexicalTable::empty();
        for &(src, tgt, p) in entries {
            let f = table.intern_src(src);
            let e = table.intern_tgt(tgt);
            table.t.insert((f, e), p);
        }
        table
    }

    /// Max deviation of any source row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        let mut sums: HashMap<u32, f64> = HashMap::new();
        for (&(f, _), &p) in &self.t {
            *sums.entry(f).or_insert(0.0) += p;
        }
        sums.values()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn intern(words: &mut Vec<String>, ids: &mut HashMap<String, u32>, w: &str) -> u32 {
    if let Some(&id) = ids.get(w) {
        return id;
    }
    let id = words.len() as u32;
    words.push(w.to_string());
    ids.insert(w.to_string(), id);
    id
}

/// Word alignment links between a source/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMatrix {
    pub src_len: usize,
    pub tgt_len: usize,
    pub links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn new(src_len: usize, tgt_len: usize, links: BTreeSet<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &links {
            if i >= src_len || j >= tgt_len {
                return Err(Error::param(format!(
                    "link ({i},{j}) out of bounds for {src_len}x{tgt_len}"
                )));
            }
        }
        Ok(AlignmentMatrix {
            src_len,
            tgt_len,
            links,
        })
    }
}

struct IdCorpus {
    pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

fn to_ids(corpus: &ParallelCorpus, table: &mut LexicalTable) -> IdCorpus {
    let pairs = corpus
        .pairs
        .iter()
        .map(|(src, tgt)| {
            let f: Vec<u32> = src
                .tokens
                .iter()
                .map(|t| table.intern_src(t.as_str()))
                .collect();
            let e: Vec<u32> = tgt
                .tokens
                .iter()
                .map(|t| table.intern_tgt(t.as_str()))
                .collect();
            (f, e)
        })
        .collect();
    IdCorpus { pairs }
}

/// Trains t(e|f) with the standard Model 1 EM updates. A NULL token is
/// prepended to every source sentence; initialization is uniform over each
/// source word's co-occurring target words.
pub fn ibm1_train(corpus: &ParallelCorpus, iterations: usize) -> Result<LexicalTable> {
    ibm1_train_with_curve(corpus, iterations).map(|(t, _)| t)
}

/// As `ibm1_train`, also returning the corpus log-likelihood after each
/// iteration.
pub fn ibm1_train_with_curve(
    corpus: &ParallelCorpus,
    iterations: usize,
) -> Result<(LexicalTable, Vec<f64>)> {
    if iterations < 1 {
        return Err(Error::param("iterations must be >= 1"));
    }
    if corpus.is_empty() {
        return Err(Error::param("cannot train on an empty corpus"));
    }

    let mut table = LexicalTable::empty();
    let ids = to_ids(corpus, &mut table);

    // Uniform initialization over co-occurring pairs.
    let mut support: HashMap<u32, BTreeSet<u32>> = HashMap::new();
    for (f_sent, e_sent) in &ids.pairs {
        let entry_null = support.entry(0).or_default();
        entry_null.extend(e_sent.iter().copied());
        for &f in f_sent {
            let entry = support.entry(f).or_default();
            entry.extend(e_sent.iter().copied());
        }
    }
    for (&f, es) in &support {
        let p = 1.0 / es.len() as f64;
        for &e in es {
            table.t.insert((f, e), p);
        }
    }

    let mut curve = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        table.t = em_step(&table, &ids);
        curve.push(corpus_loglik(&table, corpus));
    }
    Ok((table, curve))
}

/// One E+M step; returns the re-normalized table.
fn em_step(table: &LexicalTable, ids: &IdCorpus) -> HashMap<(u32, u32), f64> {
    // Per-pair expected counts, merged in corpus order so results do not
    // depend on the worker count.
    let locals: Vec<Vec<((u32, u32), f64)>> = ids
        .pairs
        .par_iter()
        .map(|(f_sent, e_sent)| {
            let mut local: Vec<((u32, u32), f64)> = Vec::new();
            for &e in e_sent {
                let mut denom = table.prob(0, e);
                for &f in f_sent {
                    denom += table.prob(f, e);
                }
                if denom <= 0.0 {
                    continue;
                }
                local.push(((0, e), table.prob(0, e) / denom));
                for &f in f_sent {
                    local.push(((f, e), table.prob(f, e) / denom));
                }
            }
            local
        })
        .collect();

    let mut counts: HashMap<(u32, u32), f64> = HashMap::new();
    let mut totals: HashMap<u32, f64> = HashMap::new();
    for local in locals {
        for ((f, e), c) in local {
            *counts.entry((f, e)).or_insert(0.0) += c;
            *totals.entry(f).or_insert(0.0) += c;
        }
    }

    counts
        .into_iter()
        .map(|((f, e), c)| ((f, e), c / totals[&f]))
        .collect()
}

/// Model 1 corpus log-likelihood (natural log, epsilon-floored).
pub fn corpus_loglik(table: &LexicalTable, corpus: &ParallelCorpus) -> f64 {
    corpus
        .pairs
        .iter()
        .map(|(src, tgt)| {
            let f_ids: Vec<Option<u32>> =
                src.tokens.iter().map(|t| table.src_id(t.as_str())).collect();
            let norm = 1.0 / (src.len() + 1) as f64;
            tgt.tokens
                .iter()
                .map(|e_tok| {
                    let e = table.tgt_id(e_tok.as_str());
                    let mut sum = match e {
                        Some(e) => table.prob(0, e),
                        None => EPSILON,
                    };
                    for f in &f_ids {
                        sum += match (f, e) {
                            (Some(f), Some(e)) => table.prob(*f, e),
                            _ => EPSILON,
                        };
                    }
                    (norm * sum).max(EPSILON).ln()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Links each target word to its most likely source word; NULL wins ties
/// and among real positions the smallest index wins.
pub fn viterbi_align(
    table: &LexicalTable,
    src: &crate::text::Sentence,
    tgt: &crate::text::Sentence,
) -> AlignmentMatrix {
    let f_ids: Vec<Option<u32>> = src.tokens.iter().map(|t| table.src_id(t.as_str())).collect();
    let mut links = BTreeSet::new();
    for (j, e_tok) in tgt.tokens.iter().enumerate() {
        let e = table.tgt_id(e_tok.as_str());
        let null_p = e.map_or(EPSILON, |e| table.prob(0, e));
        let mut best: Option<usize> = None;
        let mut best_p = null_p;
        for (i, f) in f_ids.iter().enumerate() {
            let p = match (f, e) {
                (Some(f), Some(e)) => table.prob(*f, e),
                _ => EPSILON,
            };
            if p > best_p {
                best_p = p;
                best = Some(i);
            }
        }
        if let Some(i) = best {
            links.insert((i, j));
        }
    }
    AlignmentMatrix {
        src_len: src.len(),
        tgt_len: tgt.len(),
        links,
    }
}

fn has_neighbor(links: &BTreeSet<(usize, usize)>, i: usize, j: usize) -> bool {
    for di in -1i64..=1 {
        for dj in -1i64..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni >= 0 && nj >= 0 && links.contains(&(ni as usize, nj as usize)) {
                return true;
            }
        }
    }
    false
}

/// Symmetrizes two directional alignments: start from the intersection,
/// grow into neighboring union points while either word is uncovered,
/// then add union points whose words are both uncovered. Scans row-major
/// and repeats the grow stage to a fixpoint.
pub fn grow_diag_final(
    forward: &AlignmentMatrix,
    reverse: &AlignmentMatrix,
) -> Result<AlignmentMatrix> {
    if forward.src_len != reverse.src_len || forward.tgt_len != reverse.tgt_len {
        return Err(Error::param(format!(
            "alignment dimensions differ: {}x{} vs {}x{}",
            forward.src_len, forward.tgt_len, reverse.src_len, reverse.tgt_len
        )));
    }
    let union: BTreeSet<(usize, usize)> = forward.links.union(&reverse.links).copied().collect();
    let mut links: BTreeSet<(usize, usize)> =
        forward.links.intersection(&reverse.links).copied().collect();

    let mut src_cov = vec![false; forward.src_len];
    let mut tgt_cov = vec![false; forward.tgt_len];
    for &(i, j) in &links {
        src_cov[i] = true;
        tgt_cov[j] = true;
    }

    loop {
        let mut changed = false;
        for &(i, j) in &union {
            if links.contains(&(i, j)) {
                continue;
            }
            if (!src_cov[i] || !tgt_cov[j]) && has_neighbor(&links, i, j) {
                links.insert((i, j));
                src_cov[i] = true;
                tgt_cov[j] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    for &(i, j) in &union {
        if !src_cov[i] && !tgt_cov[j] {
            links.insert((i, j));
            src_cov[i] = true;
            tgt_cov[j] = true;
        }
    }

    Ok(AlignmentMatrix {
        src_len: forward.src_len,
        tgt_len: forward.tgt_len,
        links,
    })
}

/// `src<SP>tgt<SP>prob` lines, 9 significant digits, sorted.
pub fn write_lexical_table(table: &LexicalTable) -> Vec<u8> {
    let mut out = String::new();
    for (src, tgt, p) in table.entries() {
        out.push_str(&format!("{src} {tgt} {}\n", fmt_sig9(p)));
    }
    out.into_bytes()
}

fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn read_lexical_table(bytes: &[u8]) -> Result<LexicalTable> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut table = LexicalTable::empty();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 3 {
            return Err(Error::parse(idx + 1, "expected `src tgt prob`"));
        }
        let p: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(idx + 1, "bad probability"))?;
        let f = table.intern_src(fields[0]);
        let e = table.intern_tgt(fields[1]);
        table.t.insert((f, e), p);
    }
    Ok(table)
}

/// One `i-j i-j ...` line per sentence pair (Pharaoh convention).
pub fn write_alignments(alignments: &[AlignmentMatrix]) -> Vec<u8> {
    let mut out = String::new();
    for m in alignments {
        let mut first = true;
        for &(i, j) in &m.links {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{i}-{j}"));
            first = false;
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses Pharaoh lines back into link sets; sentence dimensions are the
/// caller's (the format does not carry them).
pub fn read_alignment_links(bytes: &[u8]) -> Result<Vec<BTreeSet<(usize, usize)>>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    text.lines()
        .enumerate()
        .map(|(idx, line)| {
            let mut links = BTreeSet::new();
            for part in line.split_whitespace() {
                let (i, j) = part
                    .split_once('-')
                    .ok_or_else(|| Error::parse(idx + 1, format!("bad link {part:?}")))?;
                let i = i
                    .parse()
                    .map_err(|_| Error::parse(idx + 1, "bad source index"))?;
                let j = j
                    .parse()
                    .map_err(|_| Error::parse(idx + 1, "bad target index"))?;
                links.insert((i, j));
            }
            Ok(links)
        })
        .collect()
}
