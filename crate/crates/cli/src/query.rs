use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use revdict::embeddings::CandidateSet;
use revdict::model::{Checkpoint, ModelParameters};
use revdict::text::{normalized_tokens, remove_stopwords, NormalizationTable, StopwordList};

use crate::artifacts::{self, Prepared};
use crate::config::RunConfig;
use crate::train_cmd::check_compatible;

struct Engine {
    model: ModelParameters<f32>,
    candidates: CandidateSet<f32>,
    table: NormalizationTable,
    stops: StopwordList,
    k: usize,
}

impl Engine {
    fn suggest(&self, phrase: &str, out: &mut impl Write) -> Result<()> {
        if phrase.trim().is_empty() {
            bail!("empty phrase");
        }
        let tokens = remove_stopwords(normalized_tokens(phrase, &self.table), &self.stops);
        let ids = self.model.token_ids(tokens.iter());
        if ids.is_empty() {
            bail!("no token of {phrase:?} is in the model vocabulary");
        }
        let v = self.model.encode(&ids)?;
        let ranking = self.candidates.rank(&v, self.k)?;
        for (i, (word, sim)) in ranking.suggestions.iter().enumerate() {
            writeln!(out, "{}\t{word}\t{sim:.4}", i + 1)?;
        }
        Ok(())
    }
}

/// Returns `Ok(false)` when the REPL reported at least one error.
pub fn run(cfg: &RunConfig, checkpoint: &Path, phrase: Option<&str>) -> Result<bool> {
    if cfg.k == 0 {
        bail!("k must be at least 1");
    }
    let prepared = Prepared::load(&cfg.paths.output)?;
    let vectors = artifacts::vectors(cfg, &prepared)?;
    let ckpt = Checkpoint::load(checkpoint).with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    check_compatible(&ckpt, &prepared, vectors.targets.fingerprint(), checkpoint)?;
    let table = artifacts::normalization_table(cfg)?;
    let engine = Engine {
        model: ckpt.model,
        candidates: CandidateSet::new(&vectors.targets, vectors.targets.vocab())?,
        stops: artifacts::stopwords(cfg, &table)?,
        table,
        k: cfg.k,
    };
    let mut out = std::io::stdout().lock();
    if let Some(phrase) = phrase {
        if phrase.trim().is_empty() {
            bail!("usage: --phrase must not be empty");
        }
        engine.suggest(phrase, &mut out)?;
        return Ok(true);
    }
    let mut ok = true;
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Err(e) = engine.suggest(&line, &mut out) {
            eprintln!("error: {e:#}");
            ok = false;
        }
        writeln!(out)?;
        out.flush()?;
    }
    Ok(ok)
}
