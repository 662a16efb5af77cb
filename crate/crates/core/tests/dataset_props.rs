use std::collections::BTreeMap;

use proptest::prelude::*;
use revdict::corpus::build_ranking;
use revdict::dataset::{
    build_integral_synonyms, entries_to_tuples, preprocess_entries, split_811, stratified_sample, DefinitionTuple, LexicalEntry, Source,
    SynonymSet,
};
use revdict::text::{tokenize, NormalizationTable, StopwordList};

fn latin() -> NormalizationTable {
    NormalizationTable::parse("KEEP\t0061-007A\n").unwrap()
}

fn entries() -> impl Strategy<Value = Vec<LexicalEntry>> {
    let phrase = prop::collection::vec("[a-f]{1,3}", 0..7).prop_map(|w| w.join(" "));
    let entry = ("[a-f]{1,4}", prop::collection::vec(phrase, 0..4)).prop_map(|(w, p)| LexicalEntry::new(w, p, Source::Amid));
    prop::collection::vec(entry, 0..25)
}

fn stops() -> impl Strategy<Value = StopwordList> {
    prop::collection::vec("[a-f]{1,2}", 0..4).prop_map(|v| v.into_iter().collect())
}

fn multiset(tuples: &[DefinitionTuple]) -> BTreeMap<(Vec<String>, String), usize> {
    let mut m = BTreeMap::new();
    for t in tuples {
        *m.entry((t.phrase.clone(), t.word.clone())).or_insert(0) += 1;
    }
    m
}

fn contains_run(hay: &[&str], needle: &[&str]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

proptest! {
    #[test]
    fn preprocessing_output_is_clean_and_stable(es in entries(), stops in stops(), cap in 1usize..20) {
        let out = preprocess_entries(&es, &latin(), &stops, cap);
        for e in &out.entries {
            prop_assert!(e.word.chars().count() >= 3);
            prop_assert!(!e.phrases.is_empty());
            let head: Vec<&str> = e.word.split(' ').collect();
            for p in &e.phrases {
                let toks: Vec<&str> = p.split(' ').collect();
                prop_assert!(toks.len() >= 3);
                prop_assert!(!contains_run(&toks, &head), "{p:?} contains {:?}", e.word);
                for t in &toks {
                    prop_assert!(!stops.contains(t));
                    prop_assert!(out.vocab.contains(t));
                }
            }
        }
        let again = preprocess_entries(&out.entries, &latin(), &stops, cap);
        prop_assert_eq!(&again.entries, &out.entries);
    }

    #[test]
    fn split_is_a_partition(n in 10usize..80, seed in any::<u64>()) {
        let tuples: Vec<DefinitionTuple> = (0..n)
            .map(|i| DefinitionTuple::new(tokenize(&format!("p{} q r", i % 7)), format!("w{}", i % 5), Source::Moin))
            .collect();
        let s = split_811(&tuples, seed).unwrap();
        prop_assert_eq!(s.dev.len(), n / 10);
        prop_assert_eq!(s.test.len(), n / 10);
        let mut all = s.train.clone();
        all.extend(s.dev.iter().cloned());
        all.extend(s.test.iter().cloned());
        prop_assert_eq!(multiset(&all), multiset(&tuples));
    }

    #[test]
    fn stratified_sample_size(words in prop::collection::vec(0usize..12, 1..60), s in 1usize..15, seed in any::<u64>()) {
        // Ranking a..l by descending frequency.
        let corpus: Vec<String> = (0..12).flat_map(|i| std::iter::repeat_n(((b'a' + i as u8) as char).to_string(), 30 - i)).collect();
        let ranking = build_ranking([corpus.join(" ").as_bytes()], &latin()).unwrap();
        let n = 12;
        let tuples: Vec<DefinitionTuple> = words
            .iter()
            .map(|&i| DefinitionTuple::new(tokenize("x y z"), ((b'a' + i as u8) as char).to_string(), Source::Amid))
            .collect();
        let sample = stratified_sample(&tuples, &ranking, s, n, seed).unwrap();
        prop_assert!(sample.tuples.len() <= s);
        let nonempty: std::collections::BTreeSet<usize> = words
            .iter()
            .map(|&i| revdict::dataset::bucket_of(i + 1, s, n))
            .collect();
        prop_assert_eq!(sample.tuples.len(), nonempty.len());
        if nonempty.len() == s {
            prop_assert_eq!(sample.tuples.len(), s);
        }
    }

    #[test]
    fn no_reflexive_synonyms(es in entries(), pairs in prop::collection::vec(("[a-c]{1,2}", "[a-c]{1,2}"), 0..10)) {
        let mut dict = SynonymSet::new();
        for (a, b) in &pairs {
            dict.insert(a, b);
        }
        let syn = build_integral_synonyms(&dict, &es, &latin());
        for (w, s) in syn.iter() {
            prop_assert!(!s.contains(w));
        }
    }
}

#[test]
fn tuples_are_entry_major() {
    let es = vec![
        LexicalEntry::new("abc", ["x y z", "u v w"], Source::Amid),
        LexicalEntry::new("def", ["p q r"], Source::Moin),
    ];
    let t = entries_to_tuples(&es);
    let words: Vec<&str> = t.iter().map(|t| t.word.as_str()).collect();
    assert_eq!(words, ["abc", "abc", "def"]);
    assert_eq!(t[1].phrase, ["u", "v", "w"]);
}
