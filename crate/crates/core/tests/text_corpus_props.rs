use proptest::prelude::*;
use revdict::corpus::{build_ranking, measure_coverage, prune_ranking, IdentityLemmatizer};
use revdict::text::{normalize_text, normalized_tokens, remove_stopwords, tokenize, NormalizationTable, StopwordList, PSEUDO_SPACE};

/// Persian and Arabic letters, Latin, digits, punctuation, spaces and ZWNJ.
fn mixed_text() -> impl Strategy<Value = String> {
    let chars = prop_oneof![
        prop::char::range('\u{0600}', '\u{06FF}'),
        prop::char::range('a', 'z'),
        Just(' '),
        Just('\t'),
        Just('\n'),
        Just(PSEUDO_SPACE),
        Just('\u{00A0}'),
        any::<char>(),
    ];
    prop::collection::vec(chars, 0..60).prop_map(|v| v.into_iter().collect())
}

fn latin() -> NormalizationTable {
    NormalizationTable::parse("KEEP\t0061-007A\n").unwrap()
}

fn latin_corpus() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-e]{1,2}", 1..40).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in mixed_text()) {
        let table = NormalizationTable::persian_default();
        let once = normalize_text(&s, &table);
        prop_assert_eq!(normalize_text(&once, &table), once);
    }

    #[test]
    fn tokens_are_nonempty_and_space_free(s in mixed_text()) {
        for tok in tokenize(&s).iter().chain(normalized_tokens(&s, &NormalizationTable::persian_default()).iter()) {
            prop_assert!(!tok.is_empty());
            prop_assert!(!tok.chars().any(char::is_whitespace));
        }
        prop_assert!(normalized_tokens(&s, &NormalizationTable::persian_default()).iter().all(|t| !t.contains(PSEUDO_SPACE)));
    }

    #[test]
    fn stopword_removal_is_a_subsequence(words in prop::collection::vec("[a-d]{1,2}", 0..20), stops in prop::collection::vec("[a-d]{1,2}", 0..6)) {
        let seq = tokenize(&words.join(" "));
        let list: StopwordList = stops.iter().cloned().collect();
        let out = remove_stopwords(seq.clone(), &list);
        let mut it = seq.iter();
        for t in out.iter() {
            prop_assert!(it.any(|x| x == t), "not a subsequence");
            prop_assert!(!list.contains(t));
        }
    }

    #[test]
    fn ranking_counts_every_token(corpus in latin_corpus()) {
        let r = build_ranking([corpus.as_bytes()], &latin()).unwrap();
        let total: u64 = r.entries().iter().map(|(_, c)| c).sum();
        prop_assert_eq!(total as usize, tokenize(&corpus).len());
        prop_assert!(r.entries().windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
    }

    #[test]
    fn pruning_keeps_relative_order(corpus in latin_corpus(), stops in prop::collection::vec("[a-e]{1,2}", 0..4), lex in prop::collection::btree_set("[a-e]{1,2}", 0..15)) {
        let r = build_ranking([corpus.as_bytes()], &latin()).unwrap();
        let list: StopwordList = stops.iter().cloned().collect();
        let pruned = prune_ranking(&r, &list, &lex);
        let mut it = r.entries().iter();
        for e in pruned.entries() {
            prop_assert!(it.any(|x| x == e));
            prop_assert!(lex.contains(&e.0) && !list.contains(&e.0));
        }
    }

    #[test]
    fn coverage_is_monotone(rank_text in latin_corpus(), corpus in latin_corpus(), n1 in 1usize..30, extra in 0usize..30) {
        let r = build_ranking([rank_text.as_bytes()], &latin()).unwrap();
        let none = StopwordList::empty();
        let c1 = measure_coverage(&r, corpus.as_bytes(), n1, &latin(), &none, &IdentityLemmatizer).unwrap();
        let c2 = measure_coverage(&r, corpus.as_bytes(), n1 + extra, &latin(), &none, &IdentityLemmatizer).unwrap();
        prop_assert!(c1.covered_fraction <= c2.covered_fraction);
        prop_assert!((0.0..=1.0).contains(&c2.covered_fraction));
    }
}

#[test]
fn arabic_forms_map_to_persian() {
    let table = NormalizationTable::persian_default();
    assert_eq!(normalize_text("كتاب علي", &table), "کتاب علی");
    assert_eq!(normalized_tokens("کتاب\u{200C}خانه", &table).tokens(), ["کتاب", "خانه"]);
}

#[test]
fn coverage_toy_value() {
    let r = build_ranking(["a a b".as_bytes()], &latin()).unwrap();
    let none = StopwordList::empty();
    let c = measure_coverage(&r, "a a b".as_bytes(), 1, &latin(), &none, &IdentityLemmatizer).unwrap();
    assert_eq!(c.covered_fraction, 2.0 / 3.0);
}
