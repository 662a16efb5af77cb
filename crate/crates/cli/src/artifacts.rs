//! Files shared between subcommands.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::warn;
use revdict::corpus::{build_ranking, prune_ranking, FrequencyRanking};
use revdict::dataset::{lexicon, load_entries, read_tuples, write_tuples, DefinitionTuple, LexicalEntry, SynonymSet, TokenVocab};
use revdict::embeddings::EmbeddingTable;
use revdict::model::Architecture;
use revdict::text::{NormalizationTable, StopwordList};

use crate::config::{existing, required, RunConfig};

pub const TRAIN: &str = "train.jsonl";
pub const DEV: &str = "dev.jsonl";
pub const TEST: &str = "test.jsonl";
pub const SYNONYMS: &str = "synonyms.json";
pub const TOKENS: &str = "tokens.tsv";
pub const OUTPUT_WORDS: &str = "output_words.txt";
pub const RANKING: &str = "ranking.tsv";
pub const MANIFEST: &str = "manifest.json";

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Writes through `f` into a buffered file and flushes it.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}

pub fn normalization_table(cfg: &RunConfig) -> Result<NormalizationTable> {
    match &cfg.paths.normalization {
        Some(p) => Ok(NormalizationTable::load(existing(p)?)?),
        None => Ok(NormalizationTable::persian_default()),
    }
}

pub fn stopwords(cfg: &RunConfig, table: &NormalizationTable) -> Result<StopwordList> {
    match &cfg.paths.stopwords {
        Some(p) => Ok(StopwordList::load(existing(p)?, table)?),
        None => Ok(StopwordList::persian_default()),
    }
}

pub fn entries(cfg: &RunConfig) -> Result<Vec<LexicalEntry>> {
    let path = required(&cfg.paths.entries, "entries")?;
    load_entries(path).with_context(|| format!("loading entries from {}", path.display()))
}

/// Ranking from `paths.ranking` if set, otherwise counted over
/// `paths.corpus`. Not pruned.
pub fn raw_ranking(cfg: &RunConfig, table: &NormalizationTable) -> Result<FrequencyRanking> {
    if let Some(p) = &cfg.paths.ranking {
        return Ok(FrequencyRanking::load(existing(p)?)?);
    }
    if cfg.paths.corpus.is_empty() {
        bail!("config needs paths.ranking or paths.corpus to rank words");
    }
    let streams = cfg.paths.corpus.iter().map(|p| existing(p).and_then(open)).collect::<Result<Vec<_>>>()?;
    Ok(build_ranking(streams, table)?)
}

/// Ranking without stopwords and without words lacking a lexical entry.
pub fn pruned_ranking(
    cfg: &RunConfig,
    table: &NormalizationTable,
    stops: &StopwordList,
    entries: &[LexicalEntry],
) -> Result<FrequencyRanking> {
    Ok(prune_ranking(&raw_ranking(cfg, table)?, stops, &lexicon(entries, table)))
}

/// Everything `prepare` writes, read back.
pub struct Prepared {
    pub train: Vec<DefinitionTuple>,
    pub dev: Vec<DefinitionTuple>,
    pub test: Vec<DefinitionTuple>,
    pub synonyms: SynonymSet,
    pub tokens: TokenVocab,
    pub output_words: Vec<String>,
    pub ranking: FrequencyRanking,
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Self> {
        let ctx = |name: &str| format!("reading prepared data {} (run `prepare` first)", dir.join(name).display());
        let tuples = |name: &str| -> Result<Vec<DefinitionTuple>> { read_tuples(open(&dir.join(name)).with_context(|| ctx(name))?).with_context(|| ctx(name)) };
        let output_words = open(&dir.join(OUTPUT_WORDS))
            .with_context(|| ctx(OUTPUT_WORDS))?
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?;
        Ok(Self {
            train: tuples(TRAIN)?,
            dev: tuples(DEV)?,
            test: tuples(TEST)?,
            synonyms: SynonymSet::read_json(open(&dir.join(SYNONYMS)).with_context(|| ctx(SYNONYMS))?)?,
            tokens: TokenVocab::read_tsv(open(&dir.join(TOKENS)).with_context(|| ctx(TOKENS))?)?,
            output_words,
            ranking: FrequencyRanking::read_tsv(open(&dir.join(RANKING)).with_context(|| ctx(RANKING))?)?,
        })
    }
}

pub fn write_tuples_file(path: &Path, tuples: &[DefinitionTuple]) -> Result<()> {
    write_file(path, |w| write_tuples(tuples, w))
}

/// Pretrained vectors split into trainable inputs and frozen targets.
pub struct Vectors {
    /// Pretrained rows for input tokens (missing tokens are absent).
    pub inputs: EmbeddingTable<f32>,
    /// Frozen rows of the output words that have a vector, in rank order.
    pub targets: EmbeddingTable<f32>,
}

pub fn vectors(cfg: &RunConfig, prepared: &Prepared) -> Result<Vectors> {
    let path = required(&cfg.paths.embeddings, "embeddings")?;
    let wanted: HashSet<String> = prepared
        .tokens
        .tokens()
        .map(str::to_owned)
        .chain(prepared.output_words.iter().cloned())
        .collect();
    let table = EmbeddingTable::<f32>::load_text(path, Some(&wanted)).with_context(|| format!("loading vectors from {}", path.display()))?;
    let missing = prepared.output_words.iter().filter(|w| !table.contains(w)).count();
    if missing > 0 {
        warn!("{missing} output words have no vector and cannot be suggested");
    }
    let mut targets = table.subset(prepared.output_words.iter().map(String::as_str));
    if targets.is_empty() {
        bail!("none of the {} output words has a vector in {}", prepared.output_words.len(), path.display());
    }
    targets.freeze();
    let inputs = table.subset(prepared.tokens.tokens());
    Ok(Vectors { inputs, targets })
}

/// Tuples whose word has a target vector; the rest are dropped with a warning.
pub fn with_targets(tuples: &[DefinitionTuple], targets: &EmbeddingTable<f32>, name: &str) -> Vec<DefinitionTuple> {
    let kept: Vec<DefinitionTuple> = tuples.iter().filter(|t| targets.contains(&t.word)).cloned().collect();
    if kept.len() < tuples.len() {
        warn!("{name}: dropped {} tuples whose word has no vector", tuples.len() - kept.len());
    }
    kept
}

pub fn default_checkpoint(cfg: &RunConfig, arch: Architecture) -> PathBuf {
    cfg.paths.output.join(format!("{arch}.ckpt"))
}
