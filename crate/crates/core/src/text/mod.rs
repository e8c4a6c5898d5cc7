//! Tokenization, truecasing, corpus cleaning and corpus statistics.

mod sgm;

pub use sgm::{emit_sgm, parse_sgm, SgmDoc, SgmDocument, SgmSeg};

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A single token: non-empty UTF-8 with no internal whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Builds a token, rejecting empty strings and embedded whitespace.
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        if s.is_empty() {
            return Err(Error::param("token must be non-empty"));
        }
        if s.chars().any(char::is_whitespace) {
            return Err(Error::param(format!("token {s:?} contains whitespace")));
        }
        Ok(Token(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered sequence of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Parses a pre-tokenized line (tokens separated by whitespace).
    pub fn from_line(line: &str) -> Self {
        Sentence {
            tokens: line
                .split_whitespace()
                .map(|t| Token(t.to_string()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined surface form.
    pub fn detokenize(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.as_str());
        }
        out
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(Token::as_str).collect()
    }
}

/// Aligned source/target sentence pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParallelCorpus {
    pub pairs: Vec<(Sentence, Sentence)>,
}

impl ParallelCorpus {
    pub fn new(pairs: Vec<(Sentence, Sentence)>) -> Self {
        ParallelCorpus { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|(s, _)| s)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|(_, t)| t)
    }
}

/// Rule tokenizer: maximal alphanumeric runs are tokens, every other
/// non-whitespace character is a token of its own.
pub fn tokenize(text: &str) -> Sentence {
    let mut tokens = Vec::new();
    let mut run = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            run.push(ch);
        } else {
            if !run.is_empty() {
                tokens.push(Token(std::mem::take(&mut run)));
            }
            if !ch.is_whitespace() {
                tokens.push(Token(ch.to_string()));
            }
        }
    }
    if !run.is_empty() {
        tokens.push(Token(run));
    }
    Sentence { tokens }
}

/// Frequency-based truecasing model. Counts exclude sentence-initial
/// positions; `best_form` maps each lowercased token to its most frequent
/// surface form (ties broken lexicographically).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruecaseModel {
    pub counts: HashMap<String, u64>,
    pub best_form: HashMap<String, String>,
}

impl TruecaseModel {
    /// Rebuilds `best_form` from surface-form counts (most frequent form
    /// wins, lexicographically smallest on ties).
    pub fn from_counts(counts: HashMap<String, u64>) -> TruecaseModel {
        let mut best_form: HashMap<String, String> = HashMap::new();
        let mut forms: Vec<(&String, &u64)> = counts.iter().collect();
        forms.sort(); // lexicographic; ensures deterministic tie-breaking below
        for (form, &count) in forms {
            let key = form.to_lowercase();
            match best_form.get(&key) {
                Some(cur) if counts[cur] >= count => {}
                _ => {
                    best_form.insert(key, form.clone());
                }
            }
        }
        TruecaseModel { counts, best_form }
    }
}

pub fn train_truecaser(corpus: &[Sentence]) -> TruecaseModel {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sent in corpus {
        for tok in sent.tokens.iter().skip(1) {
            *counts.entry(tok.as_str().to_string()).or_insert(0) += 1;
        }
    }
    TruecaseModel::from_counts(counts)
}

fn is_acronym(tok: &str) -> bool {
    tok.chars().count() > 1 && tok.chars().all(|c| c.is_alphabetic() && c.is_uppercase())
}

/// Normalizes the casing of the sentence-initial token.
pub fn truecase(sentence: &Sentence, model: &TruecaseModel) -> Sentence {
    let mut out = sentence.clone();
    if let Some(first) = out.tokens.first_mut() {
        let lower = first.as_str().to_lowercase();
        if let Some(form) = model.best_form.get(&lower) {
            *first = Token(form.clone());
        } else if !is_acronym(first.as_str()) {
            *first = Token(lower);
        }
    }
    out
}

/// Uppercases the first character of the first alphabetic token.
pub fn detruecase(sentence: &Sentence) -> Sentence {
    let mut out = sentence.clone();
    for tok in out.tokens.iter_mut() {
        let mut chars = tok.as_str().chars();
        match chars.next() {
            Some(c) if c.is_alphabetic() => {
                let rest: String = chars.collect();
                let mut s: String = c.to_uppercase().collect();
                s.push_str(&rest);
                *tok = Token(s);
                break;
            }
            _ => continue,
        }
    }
    out
}

/// Keeps only pairs where both sides have 1..=max_len tokens.
pub fn clean_corpus(corpus: &ParallelCorpus, max_len: usize) -> Result<ParallelCorpus> {
    if max_len < 1 {
        return Err(Error::param("max_len must be >= 1"));
    }
    let pairs = corpus
        .pairs
        .iter()
        .filter(|(s, t)| {
            (1..=max_len).contains(&s.len()) && (1..=max_len).contains(&t.len())
        })
        .cloned()
        .collect();
    Ok(ParallelCorpus { pairs })
}

/// Per-side sentence, token and vocabulary counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CorpusStats {
    pub src_sentences: usize,
    pub tgt_sentences: usize,
    pub src_tokens: usize,
    pub tgt_tokens: usize,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
}

pub fn corpus_stats(corpus: &ParallelCorpus) -> CorpusStats {
    fn side_stats<'a>(sents: impl Iterator<Item = &'a Sentence>) -> (usize, usize, usize) {
        let mut n_sents = 0;
        let mut n_tokens = 0;
        let mut vocab: std::collections::HashSet<&str> = std::collections::HashSet::new();
        for s in sents {
            n_sents += 1;
            n_tokens += s.len();
            vocab.extend(s.tokens.iter().map(Token::as_str));
        }
        (n_sents, n_tokens, vocab.len())
    }
    let (src_sentences, src_tokens, src_vocab) = side_stats(corpus.sources());
    let (tgt_sentences, tgt_tokens, tgt_vocab) = side_stats(corpus.targets());
    CorpusStats {
        src_sentences,
        tgt_sentences,
        src_tokens,
        tgt_tokens,
        src_vocab,
        tgt_vocab,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(s: &str) -> Sentence {
        Sentence::from_line(s)
    }

    #[test]
    fn tokenize_splits_punctuation() {
        let s = tokenize("Hello, world!");
        assert_eq!(s.surfaces(), vec!["Hello", ",", "world", "!"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_digits_and_period() {
        let s = tokenize("Vilnius 2019.");
        assert_eq!(s.surfaces(), vec!["Vilnius", "2019", "."]);
    }

    #[test]
    fn tokenize_idempotent_on_tokenized_text() {
        let s = tokenize("Kaunas, 2019 m. ruduo!");
        let joined = s.detokenize();
        assert_eq!(tokenize(&joined), s);
    }

    #[test]
    fn truecaser_prefers_mid_sentence_majority() {
        // "apple" three times mid-sentence, "Apple" once sentence-initial.
        let corpus = vec![
            sent("Apple apple pie"),
            sent("an apple a day"),
            sent("one apple"),
        ];
        let model = train_truecaser(&corpus);
        assert_eq!(model.best_form["apple"], "apple");
        assert_eq!(model.counts["apple"], 3);
    }

    #[test]
    fn truecaser_empty_corpus() {
        let model = train_truecaser(&[]);
        assert!(model.best_form.is_empty());
        assert!(model.counts.is_empty());
    }

    #[test]
    fn truecaser_learns_proper_noun() {
        let corpus = vec![sent("in Paris today"), sent("to Paris now")];
        let model = train_truecaser(&corpus);
        assert_eq!(model.best_form["paris"], "Paris");
    }

    #[test]
    fn truecaser_tie_breaks_lexicographically() {
        let corpus = vec![sent("x Apple y apple")];
        let model = train_truecaser(&corpus);
        // 1 vs 1; "Apple" < "apple" in byte order.
        assert_eq!(model.best_form["apple"], "Apple");
    }

    #[test]
    fn truecase_applies_best_form() {
        let model = train_truecaser(&[sent("x the cat"), sent("y the dog")]);
        let out = truecase(&sent("The cat"), &model);
        assert_eq!(out.surfaces(), vec!["the", "cat"]);
    }

    #[test]
    fn truecase_keeps_unknown_acronym() {
        let model = TruecaseModel::default();
        let out = truecase(&sent("NATO said"), &model);
        assert_eq!(out.surfaces(), vec!["NATO", "said"]);
    }

    #[test]
    fn truecase_lowercases_unknown_word() {
        let model = TruecaseModel::default();
        let out = truecase(&sent("Zebra runs"), &model);
        assert_eq!(out.surfaces(), vec!["zebra", "runs"]);
    }

    #[test]
    fn truecase_empty_sentence() {
        let model = TruecaseModel::default();
        assert!(truecase(&Sentence::default(), &model).is_empty());
    }

    #[test]
    fn detruecase_first_alphabetic() {
        assert_eq!(detruecase(&sent("the cat")).surfaces(), vec!["The", "cat"]);
        assert_eq!(detruecase(&sent(", yes")).surfaces(), vec![",", "Yes"]);
        assert!(detruecase(&Sentence::default()).is_empty());
    }

    #[test]
    fn truecase_then_detruecase_preserves_tail() {
        let model = train_truecaser(&[sent("x the McDonald")]);
        let input = sent("The McDonald story");
        let round = detruecase(&truecase(&input, &model));
        assert_eq!(round.tokens[1..], input.tokens[1..]);
    }

    #[test]
    fn clean_removes_overlong_and_empty() {
        let long_src: String = vec!["w"; 81].join(" ");
        let ok_src: String = vec!["w"; 80].join(" ");
        let corpus = ParallelCorpus::new(vec![
            (sent(&long_src), sent("t")),
            (sent(&ok_src), sent(&ok_src)),
            (sent("s"), Sentence::default()),
        ]);
        let cleaned = clean_corpus(&corpus, 80).unwrap();
        assert_eq!(cleaned.len(), 1);
        assert_eq!(cleaned.pairs[0].0.len(), 80);
    }

    #[test]
    fn clean_rejects_zero_max_len() {
        assert!(clean_corpus(&ParallelCorpus::default(), 0).is_err());
    }

    #[test]
    fn stats_counts_by_inspection() {
        let corpus = ParallelCorpus::new(vec![(sent("a b"), sent("c"))]);
        let st = corpus_stats(&corpus);
        assert_eq!(
            (
                st.src_sentences,
                st.tgt_sentences,
                st.src_tokens,
                st.tgt_tokens,
                st.src_vocab,
                st.tgt_vocab
            ),
            (1, 1, 2, 1, 2, 1)
        );
    }

    #[test]
    fn stats_vocab_dedupes() {
        let corpus = ParallelCorpus::new(vec![(sent("a a"), sent("b b"))]);
        let st = corpus_stats(&corpus);
        assert_eq!(st.src_vocab, 1);
        assert_eq!(st.tgt_vocab, 1);
    }
}
