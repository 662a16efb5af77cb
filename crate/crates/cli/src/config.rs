//! Run configuration file.
//!
//! ```toml
//! seed = 7              # drives split, sampling, initialisation and shuffles
//! n = 3000              # recognized output words
//! s = 500               # stratified sample buckets
//! k = 10                # suggestions printed by `query`
//! token_vocab_size = 100000
//! coverage_n = [1000, 3000, 5000, 10000, 20000]
//!
//! [paths]               # relative paths resolve against this file's directory
//! entries = "entries.jsonl"
//! embeddings = "vectors.txt"
//! corpus = ["hamshahri.txt", "wiki.txt"]
//! coverage_corpus = ["wiki.txt"]
//! stopwords = "stopwords.txt"        # optional, bundled list otherwise
//! normalization = "normalization.tsv" # optional, bundled table otherwise
//! synonyms = "synonyms.json"         # optional dictionary synonyms
//! ranking = "ranking.tsv"            # optional, replaces `corpus`
//! lemmas = "lemmas.tsv"              # optional surface<TAB>lemma map
//! output = "out"
//!
//! [model]
//! architecture = "lstm-att"          # bow | rnn | lstm-att | bilstm-att
//! score_reduction = "sum"            # sum | mean | learned
//!
//! [train]
//! learning_rate = 1.0
//! batch_size = 16
//! patience = 3
//! min_delta = 1e-4
//! max_epochs = 50
//! # clip_norm = 5.0
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use revdict::model::{Architecture, ScoreReduction};
use revdict::train::TrainConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub token_vocab_size: usize,
    pub coverage_n: Vec<usize>,
    pub paths: Paths,
    pub model: ModelSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub entries: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub corpus: Vec<PathBuf>,
    pub coverage_corpus: Vec<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub normalization: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub ranking: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub architecture: Architecture,
    pub score_reduction: ScoreReduction,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            architecture: Architecture::LstmAtt,
            score_reduction: ScoreReduction::Sum,
        }
    }
}

/// Training hyperparameters; the seed comes from the top-level `seed`.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub max_epochs: usize,
    pub clip_norm: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            patience: d.patience,
            min_delta: d.min_delta,
            max_epochs: d.max_epochs,
            clip_norm: d.clip_norm,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 3000,
            s: 500,
            k: 10,
            token_vocab_size: revdict::dataset::DEFAULT_TOKEN_VOCAB_SIZE,
            coverage_n: vec![1000, 3000, 5000, 10000, 20000],
            paths: Paths {
                output: PathBuf::from("out"),
                ..Paths::default()
            },
            model: ModelSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses `path` and resolves its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            patience: t.patience,
            min_delta: t.min_delta,
            max_epochs: t.max_epochs,
            clip_norm: t.clip_norm,
            seed: self.seed,
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.entries,
            &mut self.embeddings,
            &mut self.stopwords,
            &mut self.normalization,
            &mut self.synonyms,
            &mut self.ranking,
            &mut self.lemmas,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.corpus.iter_mut().for_each(fix);
        self.coverage_corpus.iter_mut().for_each(fix);
        fix(&mut self.output);
    }
}

/// Returns the path, or an error naming the missing config key.
pub fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    match path {
        Some(p) => existing(p),
        None => bail!("config is missing paths.{key}"),
    }
}

pub fn existing(path: &Path) -> Result<&Path> {
    if !path.exists() {
        bail!("file not found: {}", path.display());
    }
    Ok(path)
}
