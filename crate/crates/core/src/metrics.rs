//! Corpus-level BLEU (cased and uncased), TER with greedy block shifts,
//! and the character-level CharacTER variant.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::text::Sentence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub hypothesis: Sentence,
    pub reference: Sentence,
}

impl EvalPair {
    pub fn new(hypothesis: Sentence, reference: Sentence) -> Self {
        EvalPair {
            hypothesis,
            reference,
        }
    }
}

pub const BLEU_MAX_N: usize = 4;

fn side_tokens(sentence: &Sentence, cased: bool) -> Vec<String> {
    sentence
        .tokens
        .iter()
        .map(|t| {
            if cased {
                t.as_str().to_string()
            } else {
                t.as_str().to_lowercase()
            }
        })
        .collect()
}

/// Corpus BLEU in [0, 100]: geometric mean of clipped n-gram precisions
/// for n = 1..=max_n times the brevity penalty, no smoothing (any zero
/// precision gives 0). Orders where the corpus has no hypothesis n-grams
/// at all are excluded from the mean, so identical short corpora still
/// score 100.
pub fn bleu(pairs: &[EvalPair], max_n: usize, cased: bool) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::param("BLEU of an empty pair list"));
    }
    if max_n < 1 {
        return Err(Error::param("max_n must be >= 1"));
    }
    let mut correct = vec![0u64; max_n];
    let mut total = vec![0u64; max_n];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for pair in pairs {
        let hyp = side_tokens(&pair.hypothesis, cased);
        let reference = side_tokens(&pair.reference, cased);
        hyp_len += hyp.len() as u64;
        ref_len += reference.len() as u64;
        for n in 1..=max_n {
            if hyp.len() < n {
                continue;
            }
            let mut ref_counts: std::collections::HashMap<&[String], u64> =
                std::collections::HashMap::new();
            for gram in reference.windows(n) {
                *ref_counts.entry(gram).or_insert(0) += 1;
            }
            let mut hyp_counts: std::collections::HashMap<&[String], u64> =
                std::collections::HashMap::new();
            for gram in hyp.windows(n) {
                *hyp_counts.entry(gram).or_insert(0) += 1;
            }
            for (gram, count) in hyp_counts {
                total[n - 1] += count;
                correct[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 0..max_n {
        if total[n] == 0 {
            continue;
        }
        if correct[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (correct[n] as f64 / total[n] as f64).ln();
        orders += 1;
    }
    if orders == 0 {
        return Ok(0.0);
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * bp * (log_sum / orders as f64).exp())
}

/// Word-level Levenshtein distance (unit insert/delete/substitute).
fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    let mut prev: Vec<u64> = (0..=b.len() as u64).collect();
    let mut cur = vec![0u64; b.len() + 1];
    for (i, av) in a.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, bv) in b.iter().enumerate() {
            let sub = prev[j] + u64::from(av != bv);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

const MAX_SHIFT_LEN: usize = 10;

/// Applies the first shift (leftmost span, shortest first, destinations in
/// ascending order) that strictly lowers `distance`; spans must occur
/// somewhere in the reference per `span_matches`.
fn greedy_shift_pass<F, G>(
    words: &[String],
    span_matches: &F,
    distance: &G,
) -> Option<(Vec<String>, u64)>
where
    F: Fn(&[String]) -> bool,
    G: Fn(&[String]) -> u64,
{
    let base = distance(words);
    for start in 0..words.len() {
        for len in 1..=MAX_SHIFT_LEN.min(words.len() - start) {
            let span = &words[start..start + len];
            if !span_matches(span) {
                continue;
            }
            let mut rest: Vec<String> = Vec::with_capacity(words.len() - len);
            rest.extend_from_slice(&words[..start]);
            rest.extend_from_slice(&words[start + len..]);
            for dest in 0..=rest.len() {
                if dest == start {
                    continue; // identity move
                }
                let mut shifted = Vec::with_capacity(words.len());
                shifted.extend_from_slice(&rest[..dest]);
                shifted.extend_from_slice(span);
                shifted.extend_from_slice(&rest[dest..]);
                let d = distance(&shifted);
                if d < base {
                    return Some((shifted, d));
                }
            }
        }
    }
    None
}

fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerResult {
    pub score: f64,
    /// Pairs excluded because the reference was empty.
    pub skipped_empty_refs: usize,
}

/// Translation edit rate: (shifts + word edit distance after shifting) /
/// total reference words. The shift loop is greedy first-improvement.
pub fn ter(pairs: &[EvalPair]) -> Result<TerResult> {
    ter_with_options(pairs, true)
}

pub fn ter_with_options(pairs: &[EvalPair], allow_shifts: bool) -> Result<TerResult> {
    if pairs.is_empty() {
        return Err(Error::param("TER of an empty pair list"));
    }
    let per_pair: Vec<Option<(u64, u64)>> = pairs
        .par_iter()
        .map(|pair| {
            if pair.reference.is_empty() {
                return None;
            }
            let reference = side_tokens(&pair.reference, true);
            let mut words = side_tokens(&pair.hypothesis, true);
            let mut shifts = 0u64;
            if allow_shifts {
                let matches = |span: &[String]| contains_subsequence(&reference, span);
                let dist = |w: &[String]| edit_distance(w, &reference);
                while let Some((shifted, _)) = greedy_shift_pass(&words, &matches, &dist) {
                    words = shifted;
                    shifts += 1;
                }
            }
            Some((shifts + edit_distance(&words, &reference), reference.len() as u64))
        })
        .collect();

    let mut edits = 0u64;
    let mut ref_words = 0u64;
    let mut skipped = 0usize;
    for entry in per_pair {
        match entry {
            Some((e, r)) => {
                edits += e;
                ref_words += r;
            }
            None => skipped += 1,
        }
    }
    if ref_words == 0 {
        return Err(Error::param("TER: every reference was empty"));
    }
    Ok(TerResult {
        score: edits as f64 / ref_words as f64,
        skipped_empty_refs: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterResult {
    pub score: f64,
    /// Pairs scored 1.0 by convention because the hypothesis was empty.
    pub flagged_empty_hyps: usize,
}

fn char_distance(a: &str, b: &str) -> u64 {
    let av: Vec<char> = a.chars().collect();
    let bv: Vec<char> = b.chars().collect();
    edit_distance(&av, &bv)
}

/// Character match ratio in [0, 1]; 1 for identical words.
fn char_match_ratio(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - char_distance(a, b) as f64 / max_len as f64
}

const CHARACTER_SHIFT_RATIO: f64 = 0.8;

/// CharacTER: per pair, (word shift cost + character edit distance after
/// shifting) / hypothesis character count, averaged over pairs. Shifts are
/// allowed only for spans whose words match a reference span with a
/// character ratio above 0.8.
pub fn character(pairs: &[EvalPair]) -> Result<CharacterResult> {
    if pairs.is_empty() {
        return Err(Error::param("CharacTER of an empty pair list"));
    }
    let per_pair: Vec<(f64, bool)> = pairs
        .par_iter()
        .map(|pair| {
            if pair.hypothesis.is_empty() {
                return (1.0, true);
            }
            let reference = side_tokens(&pair.reference, true);
            let mut words = side_tokens(&pair.hypothesis, true);
            let hyp_chars = words.join(" ").chars().count() as f64;

            let matches = |span: &[String]| {
                reference.windows(span.len()).any(|w| {
                    w.iter()
                        .zip(span)
                        .all(|(rw, sw)| char_match_ratio(rw, sw) > CHARACTER_SHIFT_RATIO)
                })
            };
            let ref_joined = reference.join(" ");
            let dist = |w: &[String]| char_distance(&w.join(" "), &ref_joined);

            let mut shifts = 0u64;
            while let Some((shifted, _)) = greedy_shift_pass(&words, &matches, &dist) {
                words = shifted;
                shifts += 1;
            }
            let edits = shifts as f64 + dist(&words) as f64;
            (edits / hyp_chars, false)
        })
        .collect();

    let mut total = 0.0;
    let mut flagged = 0usize;
    for (score, empty) in per_pair {
        total += score;
        flagged += usize::from(empty);
    }
    Ok(CharacterResult {
        score: total / pairs.len() as f64,
        flagged_empty_hyps: flagged,
    })
}
