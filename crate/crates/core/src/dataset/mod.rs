//! Lexical entries, the preprocessing pipeline, and the train/dev/test tuples
//! derived from them.

mod preprocess;
mod sample;
mod split;
mod synonyms;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{normalize_text, NormalizationTable, TokenSequence};

pub use preprocess::{preprocess_entries, Preprocessed, StageCounts, TokenVocab, DEFAULT_TOKEN_VOCAB_SIZE};
pub use sample::{bucket_of, stratified_sample, StratifiedSample};
pub use split::{restrict_to_top_words, split_811, DatasetSplit};
pub use synonyms::{build_integral_synonyms, SynonymSet};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: missing key {key:?}")]
    MissingKey { line: usize, key: &'static str },
    #[error("need at least 10 splittable tuples, got {0}")]
    TooFewTuples(usize),
    #[error("bucket count must be at least 1")]
    ZeroBuckets,
    #[error("tuple word {0:?} is not a ranked output word")]
    UnrankedWord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dictionary or corpus an entry was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Amid,
    Dehkhoda,
    Moin,
    Wikipedia,
    Farsnet,
    SynonymDictionary,
    Other,
}

impl Source {
    pub const ALL: [Source; 7] = [
        Source::Amid,
        Source::Dehkhoda,
        Source::Moin,
        Source::Wikipedia,
        Source::Farsnet,
        Source::SynonymDictionary,
        Source::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Amid => "Amid",
            Source::Dehkhoda => "Dehkhoda",
            Source::Moin => "Moin",
            Source::Wikipedia => "Wikipedia",
            Source::Farsnet => "Farsnet",
            Source::SynonymDictionary => "SynonymDictionary",
            Source::Other => "Other",
        }
    }

    /// Wikipedia and Farsnet tuples bypass the 8:1:1 split and go to training.
    pub fn is_auxiliary(self) -> bool {
        matches!(self, Source::Wikipedia | Source::Farsnet)
    }

    /// Case-insensitive; anything unrecognised is [`Source::Other`].
    pub fn parse_lenient(s: &str) -> Self {
        Self::from_str(s).unwrap_or(Source::Other)
    }
}

impl FromStr for Source {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A headword with the phrases that describe it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexicalEntry {
    pub word: String,
    pub phrases: Vec<String>,
    pub source: Source,
}

impl LexicalEntry {
    pub fn new(word: impl Into<String>, phrases: impl IntoIterator<Item = impl Into<String>>, source: Source) -> Self {
        Self {
            word: word.into(),
            phrases: phrases.into_iter().map(Into::into).collect(),
            source,
        }
    }
}

/// Parse JSON Lines lexical entries.
///
/// Entries with an empty word or no phrases are dropped, as are entries whose
/// word and phrases repeat an earlier entry.
pub fn read_entries(reader: impl BufRead) -> Result<Vec<LexicalEntry>, DatasetError> {
    let mut entries = Vec::new();
    let mut seen: HashSet<(String, Vec<String>)> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = parse_entry(&line, line_no)?;
        if entry.word.trim().is_empty() || entry.phrases.iter().all(|p| p.trim().is_empty()) {
            continue;
        }
        if seen.insert((entry.word.clone(), entry.phrases.clone())) {
            entries.push(entry);
        }
    }
    Ok(entries)
}

pub fn load_entries(path: impl AsRef<Path>) -> Result<Vec<LexicalEntry>, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_entries(std::io::BufReader::new(file))
}

fn parse_entry(line: &str, line_no: usize) -> Result<LexicalEntry, DatasetError> {
    let malformed = |reason: String| DatasetError::Malformed { line: line_no, reason };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("expected a JSON object".into()))?;
    let field = |key: &'static str| obj.get(key).ok_or(DatasetError::MissingKey { line: line_no, key });

    let word = field("word")?
        .as_str()
        .ok_or_else(|| malformed("\"word\" must be a string".into()))?
        .to_owned();
    let phrases = field("phrases")?
        .as_array()
        .ok_or_else(|| malformed("\"phrases\" must be an array".into()))?
        .iter()
        .map(|p| p.as_str().map(str::to_owned))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| malformed("\"phrases\" must contain only strings".into()))?;
    let source = field("source")?
        .as_str()
        .ok_or_else(|| malformed("\"source\" must be a string".into()))?;
    Ok(LexicalEntry {
        word,
        phrases,
        source: Source::parse_lenient(source),
    })
}

/// Normalised headwords of `entries`, used to prune the frequency ranking.
pub fn lexicon(entries: &[LexicalEntry], table: &NormalizationTable) -> BTreeSet<String> {
    entries
        .iter()
        .map(|e| crate::text::tokenize(&normalize_text(&e.word, table)).join())
        .filter(|w| !w.is_empty())
        .collect()
}

/// One (phrase, word) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefinitionTuple {
    pub phrase: Vec<String>,
    pub word: String,
    pub source: Source,
}

impl DefinitionTuple {
    pub fn new(phrase: TokenSequence, word: impl Into<String>, source: Source) -> Self {
        Self {
            phrase: phrase.into_inner(),
            word: word.into(),
            source,
        }
    }
}

/// One tuple per (phrase, word) pair, entry-major.
pub fn entries_to_tuples(entries: &[LexicalEntry]) -> Vec<DefinitionTuple> {
    entries
        .iter()
        .flat_map(|e| {
            e.phrases
                .iter()
                .map(move |p| DefinitionTuple::new(crate::text::tokenize(p), e.word.clone(), e.source))
        })
        .collect()
}

pub fn write_tuples(tuples: &[DefinitionTuple], mut out: impl Write) -> std::io::Result<()> {
    for t in tuples {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_tuples(reader: impl BufRead) -> Result<Vec<DefinitionTuple>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: idx + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
