use std::io::Write;

use anyhow::{bail, Context, Result};
use log::info;
use revdict::corpus::{FrequencyRanking, IdentityLemmatizer, LemmaCounts, LemmaMap};

use crate::artifacts::{self, open, write_file};
use crate::config::{existing, RunConfig};

pub fn rank(cfg: &RunConfig) -> Result<()> {
    let table = artifacts::normalization_table(cfg)?;
    let stops = artifacts::stopwords(cfg, &table)?;
    let entries = artifacts::entries(cfg)?;
    let ranking = artifacts::pruned_ranking(cfg, &table, &stops, &entries)?;
    std::fs::create_dir_all(&cfg.paths.output).with_context(|| format!("creating {}", cfg.paths.output.display()))?;
    let path = cfg.paths.output.join(artifacts::RANKING);
    write_file(&path, |w| ranking.write_tsv(w))?;
    info!("{} ranked words written to {}", ranking.len(), path.display());
    let mut out = std::io::stdout().lock();
    for (i, word) in ranking.top(cfg.k).enumerate() {
        writeln!(out, "{}\t{word}", i + 1)?;
    }
    Ok(())
}

/// Prepared ranking if `prepare` has run, otherwise built from the config.
fn ranking_for_coverage(cfg: &RunConfig) -> Result<FrequencyRanking> {
    let prepared = cfg.paths.output.join(artifacts::RANKING);
    if prepared.exists() {
        return Ok(FrequencyRanking::read_tsv(open(&prepared)?)?);
    }
    let table = artifacts::normalization_table(cfg)?;
    let stops = artifacts::stopwords(cfg, &table)?;
    artifacts::pruned_ranking(cfg, &table, &stops, &artifacts::entries(cfg)?)
}

pub fn coverage(cfg: &RunConfig) -> Result<()> {
    if cfg.coverage_n.is_empty() {
        bail!("coverage_n is empty");
    }
    let corpus = if cfg.paths.coverage_corpus.is_empty() {
        &cfg.paths.corpus
    } else {
        &cfg.paths.coverage_corpus
    };
    if corpus.is_empty() {
        bail!("config needs paths.coverage_corpus or paths.corpus");
    }
    let ranking = ranking_for_coverage(cfg)?;
    let table = artifacts::normalization_table(cfg)?;
    let stops = artifacts::stopwords(cfg, &table)?;
    let streams = corpus.iter().map(|p| existing(p).and_then(open)).collect::<Result<Vec<_>>>()?;
    let counts = match &cfg.paths.lemmas {
        Some(p) => LemmaCounts::from_streams(streams, &table, &stops, &LemmaMap::load(existing(p)?, &table)?)?,
        None => LemmaCounts::from_streams(streams, &table, &stops, &IdentityLemmatizer)?,
    };
    let mut out = std::io::stdout().lock();
    for &n in &cfg.coverage_n {
        let report = counts.coverage(&ranking, n)?;
        serde_json::to_writer(&mut out, &report)?;
        writeln!(out)?;
    }
    Ok(())
}
