//! Shared fixtures and independent oracles for the integration and
//! acceptance suites.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use hybridmt::align::AlignmentMatrix;
use hybridmt::pipeline::PipelineConfig;
use hybridmt::text::Sentence;

// ---------------------------------------------------------------------
// Toy copy-language fixture
// ---------------------------------------------------------------------

pub const COPY_WORDS: [&str; 8] = [
    "labas", "rytas", "vakaras", "namas", "upe", "miestas", "geras", "didelis",
];

pub fn copy_sentence(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(1..=6);
    (0..len)
        .map(|_| COPY_WORDS[rng.random_range(0..COPY_WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

pub struct CopyFixture {
    pub config: PipelineConfig,
    pub ape_sentences: Vec<String>,
}

/// Writes a copy-language corpus (target == source) plus an SGM test set
/// whose segments come from the APE split, and returns a ready config.
pub fn copy_fixture(dir: &Path, out_name: &str, seed: u64) -> CopyFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_smt = 40;
    let n_ape = 30;
    let mut lines: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    while lines.len() < n_smt + n_ape {
        let s = copy_sentence(&mut rng);
        if seen.insert(s.clone()) {
            lines.push(s);
        }
    }
    let corpus = lines.join("\n") + "\n";
    std::fs::write(dir.join("train.src"), &corpus).unwrap();
    std::fs::write(dir.join("train.tgt"), &corpus).unwrap();

    let ape_sentences: Vec<String> = lines[n_smt..].to_vec();
    let mut sgm = String::from("<srcset setid=\"toy\" srclang=\"lt\" trglang=\"en\">\n");
    sgm.push_str("<doc docid=\"doc1\">\n");
    for (i, line) in ape_sentences.iter().take(8).enumerate() {
        sgm.push_str(&format!("<seg id=\"{}\">{}</seg>\n", i + 1, capitalize(line)));
    }
    sgm.push_str("</doc>\n<doc docid=\"doc2\">\n");
    for (i, line) in ape_sentences.iter().skip(8).take(4).enumerate() {
        sgm.push_str(&format!("<seg id=\"{}\">{}</seg>\n", i + 1, capitalize(line)));
    }
    sgm.push_str("</doc>\n</srcset>\n");
    std::fs::write(dir.join("test.sgm"), &sgm).unwrap();

    let refs: Vec<String> = ape_sentences
        .iter()
        .take(8)
        .chain(ape_sentences.iter().skip(8).take(4))
        .map(|l| capitalize(l))
        .collect();
    std::fs::write(dir.join("test.ref"), refs.join("\n") + "\n").unwrap();

    let json = serde_json::json!({
        "paths": {
            "train_src": dir.join("train.src"),
            "train_tgt": dir.join("train.tgt"),
            "test_sgm": dir.join("test.sgm"),
            "test_ref": dir.join("test.ref"),
            "out_dir": dir.join(out_name),
        },
        "smt_train_count": n_smt,
        "ape_train_count": n_ape,
        "lm_order": 3,
        "em_iterations": 5,
        "seed": 11,
        "ape": {
            "d": 24,
            "epochs": 300,
            "batch_size": 8,
            "learning_rate": 1e-2,
            "max_vocab": 64,
            "seed": 11,
            "max_len": 12
        }
    });
    let config: PipelineConfig = serde_json::from_value(json).unwrap();
    CopyFixture {
        config,
        ape_sentences,
    }
}

pub fn capitalize(line: &str) -> String {
    let mut chars = line.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

// ---------------------------------------------------------------------
// Article-corruption fixture (post-editing learnability)
// ---------------------------------------------------------------------

pub const ARTICLES: [&str; 3] = ["a", "an", "the"];

const NOUN_ARTICLES: [(&str, &str); 8] = [
    ("cat", "the"),
    ("dog", "a"),
    ("apple", "an"),
    ("bird", "the"),
    ("house", "a"),
    ("owl", "an"),
    ("car", "the"),
    ("engine", "an"),
];
const VERBS: [&str; 4] = ["sees", "likes", "finds", "wants"];

fn noun_phrase(rng: &mut ChaCha8Rng) -> (String, String) {
    let (noun, article) = NOUN_ARTICLES[rng.random_range(0..NOUN_ARTICLES.len())];
    (format!("{article} {noun}"), noun.to_string())
}

/// One gold sentence with deterministic articles, plus its corrupted form
/// with every article deleted.
pub fn article_pair(rng: &mut ChaCha8Rng) -> (String, String) {
    let (np1, _) = noun_phrase(rng);
    let verb = VERBS[rng.random_range(0..VERBS.len())];
    let (np2, _) = noun_phrase(rng);
    let gold = if rng.random_bool(0.3) {
        let (np3, _) = noun_phrase(rng);
        format!("{np1} {verb} {np2} and {np3} .")
    } else {
        format!("{np1} {verb} {np2} .")
    };
    let corrupted: String = gold
        .split(' ')
        .filter(|w| !ARTICLES.contains(w))
        .collect::<Vec<_>>()
        .join(" ");
    (corrupted, gold)
}

/// Unique (corrupted, gold) pairs: `train` first, then `heldout` more.
pub fn article_corpus(
    seed: u64,
    train: usize,
    heldout: usize,
) -> (Vec<(String, String)>, Vec<(String, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    while pairs.len() < train + heldout {
        let (corrupted, gold) = article_pair(&mut rng);
        if seen.insert(gold.clone()) {
            pairs.push((corrupted, gold));
        }
    }
    let held = pairs.split_off(train);
    (pairs, held)
}

// ---------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------

/// Brute-force IBM Model 1 EM: string-keyed, expected counts by explicit
/// enumeration of every alignment function.
pub fn em_oracle(pairs: &[(&str, &str)], iterations: usize) -> HashMap<(String, String), f64> {
    const NULL: &str = "NULL";
    let split: Vec<(Vec<&str>, Vec<&str>)> = pairs
        .iter()
        .map(|(s, t)| {
            (
                s.split_whitespace().collect(),
                t.split_whitespace().collect(),
            )
        })
        .collect();
    let mut cooc: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for (f_sent, e_sent) in &split {
        for f in f_sent.iter().chain(std::iter::once(&NULL)) {
            cooc.entry(f).or_default().extend(e_sent.iter().copied());
        }
    }
    let mut t: HashMap<(String, String), f64> = HashMap::new();
    for (f, es) in &cooc {
        for e in es {
            t.insert((f.to_string(), e.to_string()), 1.0 / es.len() as f64);
        }
    }
    for _ in 0..iterations {
        let mut counts: HashMap<(String, String), f64> = HashMap::new();
        let mut totals: HashMap<String, f64> = HashMap::new();
        for (f_sent, e_sent) in &split {
            let with_null: Vec<&str> = f_sent
                .iter()
                .copied()
                .chain(std::iter::once(NULL))
                .collect();
            let n_src = with_null.len();
            let n_align = n_src.pow(e_sent.len() as u32);
            let mut weights = Vec::with_capacity(n_align);
            let mut z = 0.0;
            for code in 0..n_align {
                let mut c = code;
                let mut w = 1.0;
                for e in e_sent {
                    w *= t[&(with_null[c % n_src].to_string(), e.to_string())];
                    c /= n_src;
                }
                weights.push(w);
                z += w;
            }
            for (code, w) in weights.iter().enumerate() {
                let posterior = w / z;
                let mut c = code;
                for e in e_sent {
                    let f = with_null[c % n_src];
                    c /= n_src;
                    *counts.entry((f.to_string(), e.to_string())).or_insert(0.0) += posterior;
                    *totals.entry(f.to_string()).or_insert(0.0) += posterior;
                }
            }
        }
        t = counts
            .into_iter()
            .map(|((f, e), c)| {
                let total = totals[&f];
                ((f, e), c / total)
            })
            .collect();
    }
    t
}

/// Brute-force phrase-pair oracle: every box tested directly against the
/// consistency rule.
pub fn box_oracle(
    alignment: &AlignmentMatrix,
    max_phrase_len: usize,
) -> BTreeSet<((usize, usize), (usize, usize))> {
    let mut out = BTreeSet::new();
    for i1 in 0..alignment.src_len {
        for i2 in i1..alignment.src_len {
            if i2 - i1 + 1 > max_phrase_len {
                continue;
            }
            for j1 in 0..alignment.tgt_len {
                for j2 in j1..alignment.tgt_len {
                    if j2 - j1 + 1 > max_phrase_len {
                        continue;
                    }
                    let mut inside = false;
                    let mut straddles = false;
                    for &(i, j) in &alignment.links {
                        let in_src = (i1..=i2).contains(&i);
                        let in_tgt = (j1..=j2).contains(&j);
                        inside |= in_src && in_tgt;
                        straddles |= in_src != in_tgt;
                    }
                    if inside && !straddles {
                        out.insert(((i1, i2 + 1), (j1, j2 + 1)));
                    }
                }
            }
        }
    }
    out
}

/// Independent BLEU recomputation (precision product and explicit root).
pub fn bleu_oracle(pairs: &[(String, String)], max_n: usize, cased: bool) -> f64 {
    let norm = |s: &str| {
        if cased {
            s.to_string()
        } else {
            s.to_lowercase()
        }
    };
    let mut correct = vec![0u64; max_n];
    let mut total = vec![0u64; max_n];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (hyp, reference) in pairs {
        let h: Vec<String> = norm(hyp).split_whitespace().map(str::to_string).collect();
        let r: Vec<String> = norm(reference)
            .split_whitespace()
            .map(str::to_string)
            .collect();
        hyp_len += h.len() as u64;
        ref_len += r.len() as u64;
        for n in 1..=max_n {
            let grams = |toks: &[String]| -> HashMap<String, u64> {
                let mut m = HashMap::new();
                if toks.len() >= n {
                    for i in 0..=toks.len() - n {
                        *m.entry(toks[i..i + n].join("\u{1}")).or_insert(0) += 1;
                    }
                }
                m
            };
            let hg = grams(&h);
            let rg = grams(&r);
            for (g, c) in hg {
                total[n - 1] += c;
                correct[n - 1] += c.min(rg.get(&g).copied().unwrap_or(0));
            }
        }
    }
    if hyp_len == 0 {
        return 0.0;
    }
    let mut product = 1.0;
    let mut orders = 0;
    for n in 0..max_n {
        if total[n] == 0 {
            continue;
        }
        if correct[n] == 0 {
            return 0.0;
        }
        product *= correct[n] as f64 / total[n] as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * bp * product.powf(1.0 / orders as f64)
}

pub fn corpus_bleu_of(hyps: &[Sentence], refs: &[Sentence]) -> f64 {
    let pairs: Vec<hybridmt::metrics::EvalPair> = hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| hybridmt::metrics::EvalPair::new(h.clone(), r.clone()))
        .collect();
    hybridmt::metrics::bleu(&pairs, 4, true).unwrap()
}

// ---------------------------------------------------------------------
// Exhaustive decoding oracle
// ---------------------------------------------------------------------

use hybridmt::decoder::{score_hypothesis, DecoderConfig, OptionGrid, Segment};
use hybridmt::lm::NgramModel;
use hybridmt::phrase::PhraseTable;

/// Enumerates every segmentation x application order x option choice and
/// scores each candidate via score_hypothesis; returns the best score.
pub fn exhaustive_decode(
    source: &Sentence,
    grid: &OptionGrid,
    table: &PhraseTable,
    lm: &NgramModel,
    config: &DecoderConfig,
) -> f64 {
    fn rec(
        source: &Sentence,
        grid: &OptionGrid,
        table: &PhraseTable,
        lm: &NgramModel,
        config: &DecoderConfig,
        covered: &mut Vec<bool>,
        segs: &mut Vec<Segment>,
        best: &mut f64,
    ) {
        if covered.iter().all(|&c| c) {
            let score = score_hypothesis(source, segs, table, lm, config).unwrap();
            if score > *best {
                *best = score;
            }
            return;
        }
        for (s, e) in grid.spans() {
            if grid.options((s, e)).is_empty() || (s..e).any(|i| covered[i]) {
                continue;
            }
            for opt in grid.options((s, e)) {
                for flag in &mut covered[s..e] {
                    *flag = true;
                }
                segs.push(Segment {
                    span: (s, e),
                    tgt: opt.tgt.clone(),
                });
                rec(source, grid, table, lm, config, covered, segs, best);
                segs.pop();
                for flag in &mut covered[s..e] {
                    *flag = false;
                }
            }
        }
    }
    let mut covered = vec![false; source.len()];
    let mut segs = Vec::new();
    let mut best = f64::NEG_INFINITY;
    rec(source, grid, table, lm, config, &mut covered, &mut segs, &mut best);
    best
}

/// Random toy decoding case: sentence of up to five tokens and a table
/// with at most four targets per phrase.
pub fn random_decode_case(
    rng: &mut ChaCha8Rng,
) -> (Sentence, PhraseTable, NgramModel) {
    use hybridmt::lm::{count_ngrams, estimate_kn, Vocab};
    use hybridmt::phrase::table_from_entries;

    let words = ["a", "b", "c", "d"];
    let tgts = ["x", "y", "z", "w"];
    let n = rng.random_range(1..=5);
    let sentence = Sentence::from_line(
        &(0..n)
            .map(|_| words[rng.random_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" "),
    );
    let surf: Vec<String> = sentence.surfaces().iter().map(|s| s.to_string()).collect();
    let mut entries: Vec<(String, String, [f64; 4])> = Vec::new();
    for s in 0..n {
        for e in s + 1..=n {
            if rng.random_bool(0.55) {
                let phrase = surf[s..e].join(" ");
                for _ in 0..rng.random_range(1..=4usize) {
                    let len = rng.random_range(1..=2);
                    let tgt = (0..len)
                        .map(|_| tgts[rng.random_range(0..tgts.len())])
                        .collect::<Vec<_>>()
                        .join(" ");
                    entries.push((
                        phrase.clone(),
                        tgt,
                        [
                            rng.random_range(0.01..1.0),
                            rng.random_range(0.01..1.0),
                            rng.random_range(0.01..1.0),
                            rng.random_range(0.01..1.0),
                        ],
                    ));
                }
            }
        }
    }
    entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    entries.dedup_by(|a, b| (&a.0, &a.1) == (&b.0, &b.1));
    let raw: Vec<(&str, &str, [f64; 4])> = entries
        .iter()
        .map(|(s, t, p)| (s.as_str(), t.as_str(), *p))
        .collect();
    let table = table_from_entries(&raw);

    let lm_lines = ["x y z w", "w z y", "x y", "z x w", "y"];
    let corpus: Vec<Sentence> = lm_lines.iter().map(|l| Sentence::from_line(l)).collect();
    let vocab = Vocab::build(&corpus);
    let counts = count_ngrams(&corpus, &vocab, 2).unwrap();
    let lm = estimate_kn(&counts, vocab).unwrap();
    (sentence, table, lm)
}
