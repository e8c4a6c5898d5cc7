//! Property tests over the preprocessing and alignment invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;

use hybridmt::align::{grow_diag_final, AlignmentMatrix};
use hybridmt::text::{
    clean_corpus, detruecase, emit_sgm, parse_sgm, tokenize, train_truecaser, truecase,
    ParallelCorpus, Sentence, SgmDoc, SgmDocument, SgmSeg,
};

fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9]{0,6}"
}

fn sentence() -> impl Strategy<Value = Sentence> {
    prop::collection::vec(word(), 0..12).prop_map(|words| Sentence::from_line(&words.join(" ")))
}

proptest! {
    #[test]
    fn tokenize_idempotent_on_tokenized_text(words in prop::collection::vec("[a-zA-Z0-9]{1,8}|[.,!?;]", 0..12)) {
        let joined = words.join(" ");
        let once = tokenize(&joined);
        let twice = tokenize(&once.detokenize());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tokenize_preserves_non_whitespace(text in "[a-zA-Z0-9 .,!?()-]{0,40}") {
        let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let got: String = tokenize(&text).tokens.iter().map(|t| t.as_str()).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn clean_corpus_bounds_every_side(
        pairs in prop::collection::vec((sentence(), sentence()), 0..20),
        max_len in 1usize..10,
    ) {
        let cleaned = clean_corpus(&ParallelCorpus::new(pairs), max_len).unwrap();
        for (s, t) in &cleaned.pairs {
            prop_assert!((1..=max_len).contains(&s.len()));
            prop_assert!((1..=max_len).contains(&t.len()));
        }
    }

    #[test]
    fn truecase_detruecase_preserves_non_initial_tokens(
        corpus in prop::collection::vec(sentence(), 1..8),
        input in sentence(),
    ) {
        let model = train_truecaser(&corpus);
        let round = detruecase(&truecase(&input, &model));
        prop_assert_eq!(round.len(), input.len());
        if !input.is_empty() {
            prop_assert_eq!(&round.tokens[1..], &input.tokens[1..]);
        }
    }

    #[test]
    fn sgm_round_trip_is_identity(
        set_id in "[a-z0-9]{1,8}",
        doc_ids in prop::collection::vec("[a-z0-9]{1,6}", 0..4),
        texts in prop::collection::vec("[a-zA-Z0-9 .,&<>]{0,20}", 0..12),
    ) {
        let mut texts = texts.into_iter();
        let docs: Vec<SgmDoc> = doc_ids
            .iter()
            .enumerate()
            .map(|(d, id)| SgmDoc {
                doc_id: format!("{id}-{d}"),
                segs: texts
                    .by_ref()
                    .take(3)
                    .enumerate()
                    .map(|(i, text)| SgmSeg { id: i as u64 + 1, text })
                    .collect(),
            })
            .collect();
        let doc = SgmDocument {
            set_id,
            src_lang: "lt".into(),
            trg_lang: "en".into(),
            docs,
        };
        let back = parse_sgm(&emit_sgm(&doc)).unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn gdf_result_sits_between_intersection_and_union(
        src_len in 1usize..7,
        tgt_len in 1usize..7,
        raw_fwd in prop::collection::vec((0usize..7, 0usize..7), 0..12),
        raw_rev in prop::collection::vec((0usize..7, 0usize..7), 0..12),
    ) {
        let clamp = |raw: Vec<(usize, usize)>| -> BTreeSet<(usize, usize)> {
            raw.into_iter().map(|(i, j)| (i % src_len, j % tgt_len)).collect()
        };
        let fwd = AlignmentMatrix::new(src_len, tgt_len, clamp(raw_fwd)).unwrap();
        let rev = AlignmentMatrix::new(src_len, tgt_len, clamp(raw_rev)).unwrap();
        let out = grow_diag_final(&fwd, &rev).unwrap();
        let inter: BTreeSet<_> = fwd.links.intersection(&rev.links).copied().collect();
        let union: BTreeSet<_> = fwd.links.union(&rev.links).copied().collect();
        prop_assert!(inter.is_subset(&out.links));
        prop_assert!(out.links.is_subset(&union));
    }

    #[test]
    fn corpus_stats_vocab_equals_exact_token_set(
        pairs in prop::collection::vec((sentence(), sentence()), 0..12),
    ) {
        let corpus = ParallelCorpus::new(pairs);
        let stats = hybridmt::text::corpus_stats(&corpus);
        let src_set: BTreeSet<&str> = corpus
            .sources()
            .flat_map(|s| s.tokens.iter().map(|t| t.as_str()))
            .collect();
        let tgt_set: BTreeSet<&str> = corpus
            .targets()
            .flat_map(|s| s.tokens.iter().map(|t| t.as_str()))
            .collect();
        prop_assert_eq!(stats.src_vocab, src_set.len());
        prop_assert_eq!(stats.tgt_vocab, tgt_set.len());
    }
}
