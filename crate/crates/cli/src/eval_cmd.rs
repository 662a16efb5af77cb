use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use revdict::dataset::{stratified_sample, DefinitionTuple};
use revdict::embeddings::CandidateSet;
use revdict::eval::{evaluate, render_table, MetricReport, SplitTag};
use revdict::model::Checkpoint;

use crate::artifacts::{self, with_targets, write_file, Prepared};
use crate::config::RunConfig;
use crate::train_cmd::check_compatible;

pub fn run(cfg: &RunConfig, checkpoint: &Path, json: bool) -> Result<()> {
    let prepared = Prepared::load(&cfg.paths.output)?;
    let vectors = artifacts::vectors(cfg, &prepared)?;
    let ckpt = Checkpoint::load(checkpoint).with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    check_compatible(&ckpt, &prepared, vectors.targets.fingerprint(), checkpoint)?;
    let model = ckpt.model;

    // Candidates are the top-n output words that have a vector.
    let n = cfg.n;
    let in_top_n = |w: &str| prepared.ranking.rank(w).is_some_and(|r| r <= n);
    let words: Vec<&str> = vectors.targets.vocab().iter().map(String::as_str).filter(|w| in_top_n(w)).collect();
    if words.is_empty() {
        bail!("no output word of rank <= {n} has a vector");
    }
    let candidates = CandidateSet::new(&vectors.targets, &words)?;

    let sample = |tuples: &[DefinitionTuple], name: &str, split: SplitTag| -> Result<MetricReport> {
        let usable: Vec<DefinitionTuple> = with_targets(tuples, &vectors.targets, name)
            .into_iter()
            .filter(|t| in_top_n(&t.word))
            .collect();
        let drawn = stratified_sample(&usable, &prepared.ranking, cfg.s, n, cfg.seed)
            .with_context(|| format!("sampling {name} tuples"))?;
        if drawn.tuples.is_empty() {
            bail!("stratified sample of {name} tuples is empty");
        }
        info!("{name}: {} tuples sampled from {}", drawn.tuples.len(), usable.len());
        Ok(evaluate(&model, &drawn.tuples, &vectors.targets, &candidates, &prepared.synonyms, split)?)
    };
    let reports = vec![
        sample(&prepared.train, "train", SplitTag::Seen)?,
        sample(&prepared.test, "test", SplitTag::Unseen)?,
    ];

    let arch = model.config.architecture;
    let path = cfg.paths.output.join(format!("{arch}.metrics.jsonl"));
    write_file(&path, |w| {
        for r in &reports {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })?;
    let mut out = std::io::stdout().lock();
    if json {
        for r in &reports {
            serde_json::to_writer(&mut out, r)?;
            writeln!(out)?;
        }
    } else {
        write!(out, "{}", render_table(&reports))?;
    }
    Ok(())
}
