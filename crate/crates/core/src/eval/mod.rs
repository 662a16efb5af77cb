//! Retrieval metrics and human-rating aggregation.

mod kappa;
mod mos;

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kappa::{filter_valid_raters, linear_weighted_kappa, rater_agreement, RatingMatrix, KAPPA_CATEGORIES, VALID_RATER_THRESHOLD};
pub use mos::{mean_opinion_score, mos_report, suggestion_quality, ItemKind, ManifestItem, MosReport, QualityRow, read_manifest};

use crate::dataset::{DefinitionTuple, SynonymSet};
use crate::embeddings::{CandidateSet, EmbeddingError, EmbeddingTable, Ranking};
use crate::model::{Architecture, ModelParameters};
use crate::scalar::Scalar;
use crate::train::{encode_tuples, TrainError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{rankings} rankings for {originals} original words")]
    Misaligned { rankings: usize, originals: usize },
    #[error("original word {0:?} is not a candidate output word")]
    UnknownOriginal(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("nothing to evaluate")]
    Empty,
    #[error("score lists have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("score {0} is outside 1..=5")]
    ScoreOutOfRange(i64),
    #[error("kappa is undefined: {0}")]
    UndefinedKappa(&'static str),
    #[error("rater {0:?} shares no items with any other rater")]
    NoComparableRaters(String),
    #[error("agreement needs at least two raters")]
    TooFewRaters,
    #[error("every rater fell below the agreement threshold")]
    AllRatersDropped,
    #[error("unknown rater {0:?}")]
    UnknownRater(String),
    #[error("item {0:?} has no scores")]
    NoScores(String),
    #[error("rater {rater:?} scored item {item:?} twice")]
    DuplicateScore { rater: String, item: String },
    #[error("no items of kind {0}")]
    EmptyGroup(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Membership test for the candidate output vocabulary.
pub trait Vocabulary {
    fn contains_word(&self, word: &str) -> bool;
}

impl<T: Scalar> Vocabulary for CandidateSet<T> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

impl Vocabulary for HashSet<String> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

impl Vocabulary for BTreeSet<String> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

fn check_aligned<T, S: AsRef<str>>(rankings: &[Ranking<T>], originals: &[S], vocab: &impl Vocabulary, k: usize) -> Result<(), EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if rankings.len() != originals.len() {
        return Err(EvalError::Misaligned {
            rankings: rankings.len(),
            originals: originals.len(),
        });
    }
    if rankings.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(bad) = originals.iter().find(|w| !vocab.contains_word(w.as_ref())) {
        return Err(EvalError::UnknownOriginal(bad.as_ref().to_owned()));
    }
    Ok(())
}

/// Fraction of rankings whose first `k` suggestions contain the original.
pub fn accuracy_at_k<T, S: AsRef<str>>(
    rankings: &[Ranking<T>],
    originals: &[S],
    vocab: &impl Vocabulary,
    k: usize,
) -> Result<f64, EvalError> {
    check_aligned(rankings, originals, vocab, k)?;
    let hits = rankings
        .iter()
        .zip(originals)
        .filter(|(r, w)| r.words().take(k).any(|s| s == w.as_ref()))
        .count();
    Ok(hits as f64 / rankings.len() as f64)
}

/// Fraction of rankings whose first `k` suggestions contain the original or
/// one of its synonyms.
pub fn synonym_accuracy_at_k<T, S: AsRef<str>>(
    rankings: &[Ranking<T>],
    originals: &[S],
    synonyms: &SynonymSet,
    vocab: &impl Vocabulary,
    k: usize,
) -> Result<f64, EvalError> {
    check_aligned(rankings, originals, vocab, k)?;
    let hits = rankings
        .iter()
        .zip(originals)
        .filter(|(r, w)| {
            let w = w.as_ref();
            r.words().take(k).any(|s| s == w || synonyms.contains(w, s))
        })
        .count();
    Ok(hits as f64 / rankings.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    /// Training tuples.
    Seen,
    /// Test tuples.
    Unseen,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Seen => "seen",
            SplitTag::Unseen => "unseen",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    pub split: SplitTag,
    pub n: usize,
    pub sample_size: usize,
    #[serde(rename = "acc@10")]
    pub acc_at_10: f64,
    #[serde(rename = "acc@100")]
    pub acc_at_100: f64,
    #[serde(rename = "syn-acc@10")]
    pub syn_acc_at_10: f64,
    #[serde(rename = "syn-acc@100")]
    pub syn_acc_at_100: f64,
    #[serde(rename = "cosine loss")]
    pub cosine_loss: f64,
}

/// Ranks every tuple's encoding against `candidates` and computes the
/// report metrics. `targets` must be the frozen table used in training.
pub fn evaluate<T: Scalar>(
    model: &ModelParameters<T>,
    tuples: &[DefinitionTuple],
    targets: &EmbeddingTable<T>,
    candidates: &CandidateSet<T>,
    synonyms: &SynonymSet,
    split: SplitTag,
) -> Result<MetricReport, EvalError> {
    if tuples.is_empty() {
        return Err(EvalError::Empty);
    }
    let examples = encode_tuples(model, tuples, targets)?;
    let mut rankings = Vec::with_capacity(examples.len());
    let mut loss = 0.0;
    for ex in &examples {
        let v = model.encode(&ex.ids).map_err(TrainError::from)?;
        loss += crate::train::cosine_loss(&v, targets.row(ex.target))?.as_f64();
        rankings.push(candidates.rank(&v, 100)?);
    }
    let originals: Vec<&str> = tuples.iter().map(|t| t.word.as_str()).collect();
    Ok(MetricReport {
        architecture: Some(model.config.architecture),
        split,
        n: candidates.len(),
        sample_size: tuples.len(),
        acc_at_10: accuracy_at_k(&rankings, &originals, candidates, 10)?,
        acc_at_100: accuracy_at_k(&rankings, &originals, candidates, 100)?,
        syn_acc_at_10: synonym_accuracy_at_k(&rankings, &originals, synonyms, candidates, 10)?,
        syn_acc_at_100: synonym_accuracy_at_k(&rankings, &originals, synonyms, candidates, 100)?,
        cosine_loss: loss / examples.len() as f64,
    })
}

/// Aligned text table with one metric per row and one column per
/// (architecture, split), grouped into blocks by `n`.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut columns: Vec<(Option<Architecture>, SplitTag)> = Vec::new();
    for r in reports {
        if !columns.contains(&(r.architecture, r.split)) {
            columns.push((r.architecture, r.split));
        }
    }
    columns.sort_by_key(|(a, s)| (a.map(|a| Architecture::ALL.iter().position(|x| *x == a)), *s));
    let mut ns: Vec<usize> = reports.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();

    let header = |(a, s): &(Option<Architecture>, SplitTag)| {
        let name = a.map_or("model", Architecture::label);
        let part = match s {
            SplitTag::Seen => "training",
            SplitTag::Unseen => "testing",
        };
        format!("{name} {part}")
    };
    let width = columns.iter().map(|c| header(c).len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "");
    for c in &columns {
        let _ = write!(out, " | {:>width$}", header(c));
    }
    let _ = writeln!(out, " | {:>6}", "words");
    type Column = fn(&MetricReport) -> f64;
    let rows: [(&str, Column); 5] = [
        ("acc@10", |r| r.acc_at_10),
        ("acc@100", |r| r.acc_at_100),
        ("syn-acc@10", |r| r.syn_acc_at_10),
        ("syn-acc@100", |r| r.syn_acc_at_100),
        ("cosine loss", |r| r.cosine_loss),
    ];
    for n in ns {
        let _ = writeln!(out, "{}", "-".repeat(12 + columns.len() * (width + 3) + 9));
        for (label, get) in rows {
            let _ = write!(out, "{label:<12}");
            for c in &columns {
                match reports.iter().find(|r| r.n == n && (r.architecture, r.split) == *c) {
                    Some(r) => {
                        let _ = write!(out, " | {:>width$.2}", get(r));
                    }
                    None => {
                        let _ = write!(out, " | {:>width$}", "-");
                    }
                }
            }
            let _ = writeln!(out, " | {n:>6}");
        }
    }
    out
}

#[cfg(test)]
mod tests;
