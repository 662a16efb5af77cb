use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng as _;
use revdict::dataset::{DatasetSplit, DefinitionTuple, Source, SynonymSet};
use revdict::embeddings::{CandidateSet, EmbeddingTable, Ranking};
use revdict::eval::{
    accuracy_at_k, evaluate, filter_valid_raters, linear_weighted_kappa, mean_opinion_score, synonym_accuracy_at_k, RatingMatrix,
    SplitTag,
};
use revdict::model::{write_checkpoint, read_checkpoint, Architecture, ModelConfig, ModelParameters, ScoreReduction};
use revdict::text::tokenize;
use revdict::train::{batch_gradients, dataset_loss, encode_tuples, train, TrainConfig};
use revdict::{rng, Model};

struct Toy {
    tuples: Vec<DefinitionTuple>,
    targets: EmbeddingTable<f32>,
    model: Model,
}

fn toy(arch: Architecture, seed: u64) -> Toy {
    let mut r = rng::seeded(seed);
    let words: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
    let mut targets =
        EmbeddingTable::from_rows(3, words.iter().map(|w| (w.clone(), (0..3).map(|_| r.random_range(-1.0f32..1.0)).collect()))).unwrap();
    targets.freeze();
    let tokens: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let inputs = EmbeddingTable::from_rows(3, tokens.iter().map(|t| (t.clone(), (0..3).map(|_| r.random_range(-1.0f32..1.0)).collect()))).unwrap();
    let tuples = (0..12)
        .map(|i| DefinitionTuple::new(tokenize(&format!("t{} t{} t{}", i % 8, (i * 3 + 1) % 8, (i + 5) % 8)), format!("w{}", i % 6), Source::Amid))
        .collect();
    let config = ModelConfig {
        architecture: arch,
        dim: 3,
        input_vocab_size: tokens.len(),
        output_word_count: words.len(),
        score_reduction: ScoreReduction::Sum,
    };
    let model = ModelParameters::init(config, tokens, &inputs, seed).unwrap();
    Toy { tuples, targets, model }
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        batch_size: 4,
        max_epochs: 6,
        patience: 2,
        seed,
        ..TrainConfig::default()
    }
}

fn arch() -> impl Strategy<Value = Architecture> {
    prop::sample::select(Architecture::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn training_contracts(a in arch(), seed in 0u64..1000) {
        let t = toy(a, seed);
        let split = DatasetSplit { train: t.tuples[..9].to_vec(), dev: t.tuples[9..].to_vec(), test: vec![], seed };
        let before = t.targets.clone();
        let fp = t.targets.fingerprint();
        let (best, report) = train(t.model, &split, &t.targets, &small_config(seed), |_| {}).unwrap();
        prop_assert_eq!(&t.targets, &before);
        prop_assert_eq!(t.targets.fingerprint(), fp);
        for e in &report.epochs {
            prop_assert!((0.0..=2.0).contains(&e.train_loss) && (0.0..=2.0).contains(&e.dev_loss));
        }
        // The restored model reproduces the best dev loss, also after a checkpoint round trip.
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &best, Some(fp)).unwrap();
        let restored = read_checkpoint(buf.as_slice()).unwrap().model;
        let dev = dataset_loss(&restored, &split.dev, &t.targets).unwrap();
        prop_assert!((dev - report.best_dev_loss).abs() <= 1e-6, "{dev} vs {}", report.best_dev_loss);
    }

    #[test]
    fn small_step_decreases_batch_loss(a in arch(), seed in 0u64..1000) {
        let t = toy(a, seed);
        let examples = encode_tuples(&t.model, &t.tuples[..4], &t.targets).unwrap();
        let batch: Vec<_> = examples.iter().collect();
        let (loss, grads) = batch_gradients(&t.model, &batch, &t.targets).unwrap();
        let split = DatasetSplit { train: t.tuples[..4].to_vec(), dev: t.tuples[..4].to_vec(), test: vec![], seed };
        let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 4, max_epochs: 1, seed, ..TrainConfig::default() };
        let (stepped, _) = train(t.model, &split, &t.targets, &cfg, |_| {}).unwrap();
        let after = dataset_loss(&stepped, &t.tuples[..4], &t.targets).unwrap();
        prop_assume!(grads.global_norm() > 1e-3);
        prop_assert!(after < loss / 4.0, "{after} vs {}", loss / 4.0);
    }

    #[test]
    fn metrics_are_bounded_and_ordered(a in arch(), seed in 0u64..1000) {
        let t = toy(a, seed);
        let words: Vec<&str> = t.targets.vocab().iter().map(String::as_str).collect();
        let cands = CandidateSet::new(&t.targets, &words).unwrap();
        let mut syn = SynonymSet::new();
        syn.insert("w0", "w1");
        let r = evaluate(&t.model, &t.tuples, &t.targets, &cands, &syn, SplitTag::Seen).unwrap();
        for v in [r.acc_at_10, r.acc_at_100, r.syn_acc_at_10, r.syn_acc_at_100] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.acc_at_100 >= r.acc_at_10 && r.syn_acc_at_10 >= r.acc_at_10 && r.syn_acc_at_100 >= r.acc_at_100);
    }

    #[test]
    fn accuracy_monotone_in_k(perms in prop::collection::vec(Just((0..10).collect::<Vec<usize>>()).prop_shuffle(), 1..6), origs in prop::collection::vec(0usize..10, 6)) {
        let vocab: BTreeSet<String> = (0..10).map(|i| format!("c{i}")).collect();
        let rankings: Vec<Ranking<f64>> = perms
            .iter()
            .map(|p| Ranking { suggestions: p.iter().map(|&i| (format!("c{i}"), 0.0)).collect(), query: vec![] })
            .collect();
        let originals: Vec<String> = origs[..rankings.len()].iter().map(|i| format!("c{i}")).collect();
        let mut syn = SynonymSet::new();
        syn.insert("c0", "c9");
        let mut prev = (0.0, 0.0);
        for k in 1..=10 {
            let acc = accuracy_at_k(&rankings, &originals, &vocab, k).unwrap();
            let sacc = synonym_accuracy_at_k(&rankings, &originals, &syn, &vocab, k).unwrap();
            prop_assert!(acc >= prev.0 && sacc >= prev.1 && sacc >= acc);
            prev = (acc, sacc);
        }
        prop_assert_eq!(prev.0, 1.0);
    }

    #[test]
    fn kappa_symmetric_and_reflexive(pairs in prop::collection::vec((1u8..=5, 1u8..=5), 1..12)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        match (linear_weighted_kappa(&a, &b), linear_weighted_kappa(&b, &a)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x, y);
                prop_assert!(x <= 1.0);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "asymmetric: {x:?} {y:?}"),
        }
        prop_assert_eq!(linear_weighted_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn rater_filtering_ignores_labels(scores in prop::collection::vec(prop::collection::vec(1i64..=5, 6), 3..6), shift in 1usize..5) {
        let names: Vec<String> = (0..scores.len()).map(|i| format!("r{i}")).collect();
        let items = ["a", "b", "c", "d", "e", "f"];
        let build = |label: &dyn Fn(usize) -> String| {
            let mut triples = Vec::new();
            for (i, row) in scores.iter().enumerate() {
                for (it, &s) in items.iter().zip(row) {
                    triples.push((label(i), it.to_string(), s));
                }
            }
            RatingMatrix::from_triples(triples.iter().map(|(r, i, s)| (r.as_str(), i.as_str(), *s))).unwrap()
        };
        let n = scores.len();
        let plain = build(&|i| names[i].clone());
        // Relabel r_i as r_{i+shift}, which also changes insertion order.
        let relabelled = build(&|i| names[(i + shift) % n].clone());
        let survivors = |m: &RatingMatrix, back: &dyn Fn(&str) -> String| -> Option<BTreeSet<String>> {
            filter_valid_raters(m, 0.41).ok().map(|k| k.raters().iter().map(|r| back(r)).collect())
        };
        let a = survivors(&plain, &|r| r.to_owned());
        let b = survivors(&relabelled, &|r| {
            let j: usize = r[1..].parse().unwrap();
            names[(j + n - shift % n) % n].clone()
        });
        prop_assert_eq!(a, b);
        for it in items {
            let m = mean_opinion_score(&plain, it).unwrap();
            prop_assert!((1.0..=5.0).contains(&m));
        }
    }
}
