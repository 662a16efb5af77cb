use super::*;
use crate::dataset::Source;
use crate::model::{Encoder, ModelConfig, ScoreReduction, Tensor};
use crate::text::TokenSequence;

fn ranking(words: &[&str]) -> Ranking<f64> {
    Ranking {
        suggestions: words.iter().enumerate().map(|(i, w)| (w.to_string(), 1.0 - i as f64 / 1000.0)).collect(),
        query: vec![],
    }
}

fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

fn vocab(n: usize) -> BTreeSet<String> {
    words(n).into_iter().collect()
}

/// Ranking of all 300 words with `target` moved to 1-based `rank`.
fn ranked_at(target: &str, rank: usize) -> Ranking<f64> {
    let mut all: Vec<String> = words(300).into_iter().filter(|w| w != target).collect();
    all.insert(rank - 1, target.to_owned());
    let refs: Vec<&str> = all.iter().map(String::as_str).collect();
    ranking(&refs)
}

#[test]
fn accuracy_examples() {
    let v = vocab(300);
    let originals = ["w0", "w1", "w2", "w3"];
    let rankings: Vec<_> = originals.iter().zip([1, 5, 11, 200]).map(|(w, r)| ranked_at(w, r)).collect();
    assert_eq!(accuracy_at_k(&rankings, &originals, &v, 10).unwrap(), 0.5);
    assert_eq!(accuracy_at_k(&rankings, &originals, &v, 100).unwrap(), 0.75);

    let headed: Vec<_> = originals.iter().map(|w| ranked_at(w, 1)).collect();
    for k in [1, 10, 300] {
        assert_eq!(accuracy_at_k(&headed, &originals, &v, k).unwrap(), 1.0);
    }
    let absent: Vec<_> = originals.iter().map(|w| ranked_at(w, 300)).collect();
    assert_eq!(accuracy_at_k(&absent, &originals, &v, 10).unwrap(), 0.0);
}

#[test]
fn accuracy_errors() {
    let v = vocab(5);
    let r = vec![ranking(&["w0", "w1"])];
    assert!(matches!(accuracy_at_k(&r, &["w0", "w1"], &v, 1), Err(EvalError::Misaligned { .. })));
    assert!(matches!(accuracy_at_k(&r, &["zz"], &v, 1), Err(EvalError::UnknownOriginal(_))));
    assert!(matches!(accuracy_at_k(&r, &["w0"], &v, 0), Err(EvalError::ZeroK)));
}

#[test]
fn synonym_accuracy_examples() {
    let v = vocab(300);
    let originals = ["w0", "w1", "w2"];
    let rankings = vec![ranking(&["w5", "w0"]), ranking(&["w7", "w8", "w1"]), ranking(&["w9", "w2"])];
    let empty = SynonymSet::new();
    assert_eq!(
        synonym_accuracy_at_k(&rankings, &originals, &empty, &v, 1).unwrap(),
        accuracy_at_k(&rankings, &originals, &v, 1).unwrap()
    );
    let mut syn = SynonymSet::new();
    syn.insert("w0", "w5");
    syn.insert("w1", "w8");
    // Only w0 has a synonym at rank 1; w1's synonym sits at rank 2.
    assert!((synonym_accuracy_at_k(&rankings, &originals, &syn, &v, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((synonym_accuracy_at_k(&rankings, &originals, &syn, &v, 2).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn adversarial_rater_is_dropped() {
    let items = ["a", "b", "c", "d", "e", "f"];
    let good = [1i64, 2, 3, 4, 5, 3];
    let mut triples = Vec::new();
    let names: Vec<String> = (0..5).map(|i| format!("clone{i}")).collect();
    for n in &names {
        for (it, s) in items.iter().zip(good) {
            triples.push((n.as_str(), *it, s));
        }
    }
    for (it, s) in items.iter().zip(good) {
        triples.push(("rogue", *it, 6 - s));
    }
    let m = RatingMatrix::from_triples(triples).unwrap();
    let kept = filter_valid_raters(&m, VALID_RATER_THRESHOLD).unwrap();
    assert_eq!(kept.raters(), names.as_slice());

    // Oracle: each clone agrees with 4 clones (1.0) and the rogue.
    let rogue_k = linear_weighted_kappa(&[1, 2, 3, 4, 5, 3], &[5, 4, 3, 2, 1, 3]).unwrap();
    assert!((rater_agreement(&m, "clone0").unwrap() - (4.0 + rogue_k) / 5.0).abs() < 1e-15);
    assert!((rater_agreement(&m, "rogue").unwrap() - rogue_k).abs() < 1e-15);

    let all = filter_valid_raters(&m, f64::NEG_INFINITY).unwrap();
    assert_eq!(all, m);
}

#[test]
fn all_dropped_is_an_error() {
    let m = RatingMatrix::from_triples([("a", "1", 1), ("a", "2", 5), ("b", "1", 5), ("b", "2", 1)]).unwrap();
    assert!(matches!(filter_valid_raters(&m, 0.41), Err(EvalError::AllRatersDropped)));
}

#[test]
fn mos_report_per_source() {
    let m = RatingMatrix::from_triples([
        ("r1", "o1", 4),
        ("r1", "s1", 2),
        ("r2", "o1", 4),
        ("r2", "s1", 2),
        ("r1", "o2", 5),
        ("r2", "o2", 5),
        ("r1", "t2", 1),
        ("r2", "t2", 1),
    ])
    .unwrap();
    let item = |id: &str, kind, src: &str| ManifestItem {
        item_id: id.into(),
        kind,
        phrase: String::new(),
        word: String::new(),
        source: Some(src.into()),
    };
    let manifest = vec![
        item("o1", ItemKind::Original, "amid"),
        item("s1", ItemKind::Suggestion1, "amid"),
        item("o2", ItemKind::Original, "moin"),
        item("t2", ItemKind::Suggestion1, "moin"),
    ];
    let report = mos_report(&m, &manifest, VALID_RATER_THRESHOLD).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.rows[0].source.as_deref(), Some("amid"));
    assert_eq!(report.rows[0].q_t, Some(4.0));
    assert_eq!(report.rows[0].q_1, Some(2.0));
    assert_eq!(report.rows[0].q_2, None);
    assert_eq!(report.rows[1].q_t, Some(5.0));
    assert!(report.render().contains("amid"));
}

fn tuple(phrase: &str, word: &str) -> DefinitionTuple {
    DefinitionTuple::new(TokenSequence::new(phrase.split(' ').map(String::from).collect::<Vec<_>>()), word, Source::Amid)
}

#[test]
fn evaluate_end_to_end() {
    let targets = EmbeddingTable::from_rows(2, [("x", vec![1.0, 0.0]), ("y", vec![0.0, 1.0]), ("z", vec![-1.0, 0.1])]).unwrap();
    let config = ModelConfig {
        architecture: Architecture::Bow,
        dim: 2,
        input_vocab_size: 2,
        output_word_count: 3,
        score_reduction: ScoreReduction::Sum,
    };
    let emb = Tensor::from_vec(&[2, 2], vec![1.0, 0.1, 0.1, 1.0]);
    let model = ModelParameters::new(config, vec!["a".into(), "b".into()], emb, Encoder::Bow { w: Tensor::identity(2) }).unwrap();
    let candidates = CandidateSet::new(&targets, &["x", "y", "z"]).unwrap();
    let tuples = vec![tuple("a", "x"), tuple("b", "x")];
    let mut syn = SynonymSet::new();
    syn.insert("x", "y");
    let r = evaluate(&model, &tuples, &targets, &candidates, &syn, SplitTag::Unseen).unwrap();
    assert_eq!(r.sample_size, 2);
    assert_eq!(r.n, 3);
    assert_eq!(r.acc_at_100, 1.0);
    assert_eq!(r.acc_at_10, 1.0);
    assert!(r.syn_acc_at_10 >= r.acc_at_10);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["acc@10", "acc@100", "syn-acc@10", "syn-acc@100", "cosine loss", "sample_size", "split", "n"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let table = render_table(&[r.clone(), MetricReport { split: SplitTag::Seen, ..r }]);
    assert!(table.contains("BOW training") && table.contains("BOW testing") && table.contains("syn-acc@100"));
}
