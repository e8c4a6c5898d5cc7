//! Extraction of alignment-consistent phrase pairs and estimation of the
//! four phrase-table scores (forward/reverse relative frequencies and
//! lexical weights).

use std::collections::HashMap;

use rayon::prelude::*;

use crate::align::{AlignmentMatrix, LexicalTable, NULL_TOKEN};
use crate::error::{Error, Result};
use crate::text::{ParallelCorpus, Sentence};

pub const DEFAULT_MAX_PHRASE_LEN: usize = 7;

/// A source/target span pair, half-open over token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExtractedPhrase {
    pub src: (usize, usize),
    pub tgt: (usize, usize),
}

/// All phrase pairs consistent with the alignment: every link inside the
/// box stays inside, at least one link is present, spans fit within
/// `max_phrase_len`, and target spans extend over unaligned boundary words.
pub fn extract_consistent(
    alignment: &AlignmentMatrix,
    max_phrase_len: usize,
) -> Vec<ExtractedPhrase> {
    let (src_len, tgt_len) = (alignment.src_len, alignment.tgt_len);
    let links = &alignment.links;
    let mut tgt_aligned = vec![false; tgt_len];
    for &(_, j) in links {
        tgt_aligned[j] = true;
    }

    let mut out = Vec::new();
    for i1 in 0..src_len {
        for i2 in i1..src_len.min(i1 + max_phrase_len) {
            let mut j_min = usize::MAX;
            let mut j_max = 0;
            for &(i, j) in links.iter() {
                if (i1..=i2).contains(&i) {
                    j_min = j_min.min(j);
                    j_max = j_max.max(j);
                }
            }
            if j_min == usize::MAX {
                continue; // no link inside the box
            }
            let consistent = links
                .iter()
                .all(|&(i, j)| !(j_min..=j_max).contains(&j) || (i1..=i2).contains(&i));
            if !consistent {
                continue;
            }
            // Widen the target span over unaligned boundary words.
            let mut js = j_min as i64;
            loop {
                let mut je = j_max;
                loop {
                    if je - (js as usize) < max_phrase_len {
                        out.push(ExtractedPhrase {
                            src: (i1, i2 + 1),
                            tgt: (js as usize, je + 1),
                        });
                    }
                    je += 1;
                    if je >= tgt_len || tgt_aligned[je] {
                        break;
                    }
                }
                js -= 1;
                if js < 0 || tgt_aligned[js as usize] {
                    break;
                }
            }
        }
    }
    out
}

/// A scored translation option for one source phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseEntry {
    pub tgt: String,
    pub phi_tgt_given_src: f64,
    pub phi_src_given_tgt: f64,
    pub lex_tgt_given_src: f64,
    pub lex_src_given_tgt: f64,
}

impl PhraseEntry {
    pub fn scores(&self) -> [f64; 4] {
        [
            self.phi_tgt_given_src,
            self.phi_src_given_tgt,
            self.lex_tgt_given_src,
            self.lex_src_given_tgt,
        ]
    }
}

/// Phrase table: source phrase -> entries sorted by descending forward
/// relative frequency (ties by target phrase). Immutable after build.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseTable {
    entries: HashMap<String, Vec<PhraseEntry>>,
}

impl PhraseTable {
    /// Exact-match retrieval; an empty slice when absent.
    pub fn lookup(&self, src: &str) -> &[PhraseEntry] {
        self.entries.get(src).map_or(&[], Vec::as_slice)
    }

    pub fn source_phrases(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn num_entries(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn insert_sorted(mut entries: HashMap<String, Vec<PhraseEntry>>) -> PhraseTable {
        for list in entries.values_mut() {
            list.sort_unstable_by(|a, b| {
                b.phi_tgt_given_src
                    .total_cmp(&a.phi_tgt_given_src)
                    .then_with(|| a.tgt.cmp(&b.tgt))
            });
        }
        PhraseTable { entries }
    }
}

fn join(tokens: &[crate::text::Token]) -> String {
    tokens
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Koehn-style lexical weights for one extracted instance: product over
/// target words of the averaged t(e|f) across their linked sources, with
/// NULL standing in for unlinked words (and symmetrically in reverse).
fn lexical_weights(
    src: &Sentence,
    tgt: &Sentence,
    phrase: &ExtractedPhrase,
    alignment: &AlignmentMatrix,
    lex_fwd: &LexicalTable,
    lex_rev: &LexicalTable,
) -> (f64, f64) {
    let in_box = |i: usize, j: usize| {
        (phrase.src.0..phrase.src.1).contains(&i) && (phrase.tgt.0..phrase.tgt.1).contains(&j)
    };

    let mut fwd = 1.0;
    for j in phrase.tgt.0..phrase.tgt.1 {
        let e = tgt.tokens[j].as_str();
        let linked: Vec<usize> = alignment
            .links
            .iter()
            .filter(|&&(i, jj)| jj == j && in_box(i, jj))
            .map(|&(i, _)| i)
            .collect();
        fwd *= if linked.is_empty() {
            lex_fwd.prob_str(NULL_TOKEN, e)
        } else {
            linked
                .iter()
                .map(|&i| lex_fwd.prob_str(src.tokens[i].as_str(), e))
                .sum::<f64>()
                / linked.len() as f64
        };
    }

    let mut rev = 1.0;
    for i in phrase.src.0..phrase.src.1 {
        let f = src.tokens[i].as_str();
        let linked: Vec<usize> = alignment
            .links
            .iter()
            .filter(|&&(ii, j)| ii == i && in_box(ii, j))
            .map(|&(_, j)| j)
            .collect();
        rev *= if linked.is_empty() {
            lex_rev.prob_str(NULL_TOKEN, f)
        } else {
            linked
                .iter()
                .map(|&j| lex_rev.prob_str(tgt.tokens[j].as_str(), f))
                .sum::<f64>()
                / linked.len() as f64
        };
    }
    (fwd, rev)
}

/// Builds the scored table over a word-aligned corpus. Relative
/// frequencies come from extraction counts; lexical weights keep the
/// best value seen across extraction instances.
pub fn build_table(
    corpus: &ParallelCorpus,
    alignments: &[AlignmentMatrix],
    lex_fwd: &LexicalTable,
    lex_rev: &LexicalTable,
    max_phrase_len: usize,
) -> Result<PhraseTable> {
    if corpus.len() != alignments.len() {
        return Err(Error::param(format!(
            "corpus has {} pairs but {} alignments given",
            corpus.len(),
            alignments.len()
        )));
    }

    let per_pair: Vec<Vec<(String, String, f64, f64)>> = corpus
        .pairs
        .par_iter()
        .zip(alignments)
        .map(|((src, tgt), alignment)| {
            extract_consistent(alignment, max_phrase_len)
                .into_iter()
                .map(|phrase| {
                    let (fwd, rev) =
                        lexical_weights(src, tgt, &phrase, alignment, lex_fwd, lex_rev);
                    (
                        join(&src.tokens[phrase.src.0..phrase.src.1]),
                        join(&tgt.tokens[phrase.tgt.0..phrase.tgt.1]),
                        fwd,
                        rev,
                    )
                })
                .collect()
        })
        .collect();

    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    let mut src_totals: HashMap<String, u64> = HashMap::new();
    let mut tgt_totals: HashMap<String, u64> = HashMap::new();
    let mut best_lex: HashMap<(String, String), (f64, f64)> = HashMap::new();
    for pair_phrases in per_pair {
        for (src, tgt, fwd, rev) in pair_phrases {
            *src_totals.entry(src.clone()).or_insert(0) += 1;
            *tgt_totals.entry(tgt.clone()).or_insert(0) += 1;
            let key = (src, tgt);
            *counts.entry(key.clone()).or_insert(0) += 1;
            let slot = best_lex.entry(key).or_insert((0.0, 0.0));
            slot.0 = slot.0.max(fwd);
            slot.1 = slot.1.max(rev);
        }
    }

    let mut entries: HashMap<String, Vec<PhraseEntry>> = HashMap::new();
    for ((src, tgt), count) in counts {
        let (lex_fwd_w, lex_rev_w) = best_lex[&(src.clone(), tgt.clone())];
        let entry = PhraseEntry {
            phi_tgt_given_src: count as f64 / src_totals[&src] as f64,
            phi_src_given_tgt: count as f64 / tgt_totals[&tgt] as f64,
            lex_tgt_given_src: lex_fwd_w,
            lex_src_given_tgt: lex_rev_w,
            tgt,
        };
        entries.entry(src).or_default().push(entry);
    }
    Ok(PhraseTable::insert_sorted(entries))
}

fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// `src ||| tgt ||| p1 p2 p3 p4` lines, sorted, scores with 6 significant
/// digits.
pub fn write_table(table: &PhraseTable) -> Vec<u8> {
    let mut keys: Vec<&String> = table.entries.keys().collect();
    keys.sort_unstable();
    let mut out = String::new();
    for src in keys {
        for e in &table.entries[src] {
            out.push_str(&format!(
                "{src} ||| {} ||| {} {} {} {}\n",
                e.tgt,
                fmt_sig6(e.phi_tgt_given_src),
                fmt_sig6(e.phi_src_given_tgt),
                fmt_sig6(e.lex_tgt_given_src),
                fmt_sig6(e.lex_src_given_tgt),
            ));
        }
    }
    out.into_bytes()
}

pub fn read_table(bytes: &[u8]) -> Result<PhraseTable> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut entries: HashMap<String, Vec<PhraseEntry>> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(" ||| ").collect();
        if fields.len() != 3 {
            return Err(Error::parse(idx + 1, "expected `src ||| tgt ||| scores`"));
        }
        let scores: Vec<f64> = fields[2]
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::parse(idx + 1, format!("bad score {s:?}")))
            })
            .collect::<Result<_>>()?;
        if scores.len() != 4 {
            return Err(Error::parse(
                idx + 1,
                format!("expected 4 scores, found {}", scores.len()),
            ));
        }
        entries.entry(fields[0].to_string()).or_default().push(PhraseEntry {
            tgt: fields[1].to_string(),
            phi_tgt_given_src: scores[0],
            phi_src_given_tgt: scores[1],
            lex_tgt_given_src: scores[2],
            lex_src_given_tgt: scores[3],
        });
    }
    Ok(PhraseTable::insert_sorted(entries))
}

/// Builds a table directly from raw entries (tests and toy setups).
pub fn table_from_entries(raw: &[(&str, &str, [f64; 4])]) -> PhraseTable {
    let mut entries: HashMap<String, Vec<PhraseEntry>> = HashMap::new();
    for &(src, tgt, s) in raw {
        entries.entry(src.to_string()).or_default().push(PhraseEntry {
            tgt: tgt.to_string(),
            phi_tgt_given_src: s[0],
            phi_src_given_tgt: s[1],
            lex_tgt_given_src: s[2],
            lex_src_given_tgt: s[3],
        });
    }
    PhraseTable::insert_sorted(entries)
}
