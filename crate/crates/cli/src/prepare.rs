use anyhow::{Context, Result};
use log::info;
use revdict::dataset::{
    build_integral_synonyms, entries_to_tuples, preprocess_entries, restrict_to_top_words, split_811, DatasetSplit, StageCounts,
    SynonymSet,
};
use serde::Serialize;

use crate::artifacts::{self, write_file, write_tuples_file};
use crate::config::{existing, RunConfig};

#[derive(Serialize)]
struct SplitSizes {
    train: usize,
    dev: usize,
    test: usize,
}

impl From<&DatasetSplit> for SplitSizes {
    fn from(s: &DatasetSplit) -> Self {
        Self {
            train: s.train.len(),
            dev: s.dev.len(),
            test: s.test.len(),
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    n: usize,
    token_vocab_size: usize,
    stages: StageCounts,
    tuples: usize,
    split: SplitSizes,
    restricted: SplitSizes,
    recognized_tokens: usize,
    ranked_words: usize,
    output_words: usize,
    synonym_headwords: usize,
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let table = artifacts::normalization_table(cfg).context("stage normalize")?;
    let stops = artifacts::stopwords(cfg, &table).context("stage stopwords")?;
    let entries = artifacts::entries(cfg).context("stage load_entries")?;

    let pre = preprocess_entries(&entries, &table, &stops, cfg.token_vocab_size);
    let tuples = entries_to_tuples(&pre.entries);
    let split = split_811(&tuples, cfg.seed).context("stage split")?;
    let ranking = artifacts::pruned_ranking(cfg, &table, &stops, &entries).context("stage ranking")?;
    let restricted = restrict_to_top_words(&split, &ranking, cfg.n);
    let dictionary = match &cfg.paths.synonyms {
        Some(p) => SynonymSet::read_json(artifacts::open(existing(p)?)?).context("stage synonyms")?,
        None => SynonymSet::new(),
    };
    let synonyms = build_integral_synonyms(&dictionary, &entries, &table);
    let output_words: Vec<&str> = ranking.top(cfg.n).collect();

    let out = &cfg.paths.output;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_tuples_file(&out.join(artifacts::TRAIN), &restricted.train)?;
    write_tuples_file(&out.join(artifacts::DEV), &restricted.dev)?;
    write_tuples_file(&out.join(artifacts::TEST), &restricted.test)?;
    write_file(&out.join(artifacts::SYNONYMS), |w| synonyms.write_json(w))?;
    write_file(&out.join(artifacts::TOKENS), |w| pre.vocab.write_tsv(w))?;
    write_file(&out.join(artifacts::RANKING), |w| ranking.write_tsv(w))?;
    write_file(&out.join(artifacts::OUTPUT_WORDS), |w| {
        use std::io::Write;
        output_words.iter().try_for_each(|word| writeln!(w, "{word}"))
    })?;
    let manifest = Manifest {
        seed: cfg.seed,
        n: cfg.n,
        token_vocab_size: cfg.token_vocab_size,
        stages: pre.stages,
        tuples: tuples.len(),
        split: (&split).into(),
        restricted: (&restricted).into(),
        recognized_tokens: pre.vocab.len(),
        ranked_words: ranking.len(),
        output_words: output_words.len(),
        synonym_headwords: synonyms.len(),
    };
    write_file(&out.join(artifacts::MANIFEST), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        use std::io::Write;
        writeln!(w)
    })?;
    info!("wrote prepared data to {}", out.display());
    println!(
        "train {} dev {} test {} (before restriction {} / {} / {})",
        restricted.train.len(),
        restricted.dev.len(),
        restricted.test.len(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    Ok(())
}
