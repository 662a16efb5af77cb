//! Word frequency ranking over a normalised corpus and the lemma coverage
//! measurement used to choose the output vocabulary size.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalized_tokens, NormalizationTable, StopwordList};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("coverage needs n >= 1")]
    ZeroN,
    #[error("corpus stream {stream}: {source}")]
    Read {
        stream: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("ranking line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token counts, mergeable across shards.
#[derive(Debug, Clone, Default)]
pub struct WordCounts(HashMap<String, u64>);

impl WordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, count: u64) {
        *self.0.entry(word.to_owned()).or_insert(0) += count;
    }

    /// Normalise and tokenize one line of text, counting every token.
    pub fn add_text(&mut self, text: &str, table: &NormalizationTable) {
        for tok in normalized_tokens(text, table).iter() {
            self.add(tok, 1);
        }
    }

    pub fn merge(&mut self, other: WordCounts) {
        for (w, c) in other.0 {
            *self.0.entry(w).or_insert(0) += c;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn get(&self, word: &str) -> u64 {
        self.0.get(word).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Sorted by descending count, ties by ascending word.
    pub fn into_ranking(self) -> FrequencyRanking {
        let mut entries: Vec<(String, u64)> = self.0.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyRanking::from_sorted(entries)
    }
}

/// Words sorted by descending corpus frequency; ranks are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyRanking {
    entries: Vec<(String, u64)>,
    positions: HashMap<String, usize>,
}

impl FrequencyRanking {
    fn from_sorted(entries: Vec<(String, u64)>) -> Self {
        let positions = entries.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        Self { entries, positions }
    }

    /// Entries must already be in ranking order with unique words and
    /// non-increasing counts.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for (i, (w, c)) in entries.iter().enumerate() {
            if !seen.insert(w.as_str()) {
                return Err(CorpusError::Parse {
                    line: i + 1,
                    reason: format!("duplicate word {w:?}"),
                });
            }
            if i > 0 && entries[i - 1].1 < *c {
                return Err(CorpusError::Parse {
                    line: i + 1,
                    reason: "counts must be non-increasing".into(),
                });
            }
        }
        Ok(Self::from_sorted(entries))
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank(&self, word: &str) -> Option<usize> {
        self.positions.get(word).map(|i| i + 1)
    }

    /// The `n` highest ranked words (fewer if the ranking is shorter).
    pub fn top(&self, n: usize) -> impl Iterator<Item = &str> {
        self.entries.iter().take(n).map(|(w, _)| w.as_str())
    }

    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        for (w, c) in &self.entries {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |reason: &str| CorpusError::Parse {
                line: i + 1,
                reason: reason.to_owned(),
            };
            let (word, count) = line.split_once('\t').ok_or_else(|| parse_err("expected word<TAB>count"))?;
            let count = count.trim().parse().map_err(|_| parse_err("count is not an integer"))?;
            entries.push((word.to_owned(), count));
        }
        Self::from_entries(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(file))
    }
}

/// Count the normalised tokens of every stream and sort them into a ranking.
///
/// Streams are read line by line; memory is bounded by the vocabulary size.
pub fn build_ranking<R: BufRead>(
    streams: impl IntoIterator<Item = R>,
    table: &NormalizationTable,
) -> Result<FrequencyRanking, CorpusError> {
    let mut counts = WordCounts::new();
    for (idx, stream) in streams.into_iter().enumerate() {
        counts.merge(count_stream(stream, table).map_err(|source| CorpusError::Read { stream: idx, source })?);
    }
    if counts.total() == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(counts.into_ranking())
}

/// Token counts of one stream. Invalid UTF-8 is reported as an I/O error.
pub fn count_stream(stream: impl BufRead, table: &NormalizationTable) -> std::io::Result<WordCounts> {
    let mut counts = WordCounts::new();
    for line in stream.lines() {
        counts.add_text(&line?, table);
    }
    Ok(counts)
}

/// Drop stopwords and words without a lexical entry, keeping relative order.
pub fn prune_ranking(ranking: &FrequencyRanking, stops: &StopwordList, lexicon: &BTreeSet<String>) -> FrequencyRanking {
    let entries = ranking
        .entries
        .iter()
        .filter(|(w, _)| !stops.contains(w) && lexicon.contains(w))
        .cloned()
        .collect();
    FrequencyRanking::from_sorted(entries)
}

/// Maps surface forms to lemmas.
pub trait Lemmatizer {
    fn lemma<'a>(&'a self, word: &'a str) -> &'a str;
}

/// Surface form is its own lemma.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        word
    }
}

/// Lemma lookup table read from `surface<TAB>lemma` lines; unknown words
/// are their own lemma.
#[derive(Debug, Clone, Default)]
pub struct LemmaMap(HashMap<String, String>);

impl LemmaMap {
    pub fn read_tsv(reader: impl BufRead, table: &NormalizationTable) -> Result<Self, CorpusError> {
        let mut map = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                line: i + 1,
                reason: "expected surface<TAB>lemma".into(),
            })?;
            let surface = crate::text::normalize_text(surface.trim(), table);
            let lemma = crate::text::normalize_text(lemma.trim(), table);
            map.insert(surface, lemma);
        }
        Ok(Self(map))
    }

    pub fn load(path: impl AsRef<Path>, table: &NormalizationTable) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(file), table)
    }
}

impl Lemmatizer for LemmaMap {
    fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        self.0.get(word).map(String::as_str).unwrap_or(word)
    }
}

impl<F> Lemmatizer for F
where
    F: for<'a> Fn(&'a str) -> &'a str,
{
    fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        self(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    pub covered_fraction: f64,
}

/// Lemma occurrence counts of a normalised, stopword-free corpus.
#[derive(Debug, Clone)]
pub struct LemmaCounts {
    counts: WordCounts,
}

impl LemmaCounts {
    pub fn from_streams<R: BufRead>(
        streams: impl IntoIterator<Item = R>,
        table: &NormalizationTable,
        stops: &StopwordList,
        lemmatizer: &impl Lemmatizer,
    ) -> Result<Self, CorpusError> {
        let mut counts = WordCounts::new();
        for (idx, stream) in streams.into_iter().enumerate() {
            for line in stream.lines() {
                let line = line.map_err(|source| CorpusError::Read { stream: idx, source })?;
                for tok in normalized_tokens(&line, table).iter() {
                    if !stops.contains(tok) {
                        counts.add(lemmatizer.lemma(tok), 1);
                    }
                }
            }
        }
        if counts.total() == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.total()
    }

    /// Fraction of lemma occurrences whose lemma is among the top `n` words.
    pub fn coverage(&self, ranking: &FrequencyRanking, n: usize) -> Result<CoverageReport, CorpusError> {
        if n == 0 {
            return Err(CorpusError::ZeroN);
        }
        let covered: u64 = ranking.top(n).map(|w| self.counts.get(w)).sum();
        Ok(CoverageReport {
            n,
            covered_fraction: covered as f64 / self.total() as f64,
        })
    }
}

/// One-shot coverage measurement over a single corpus stream.
pub fn measure_coverage(
    ranking: &FrequencyRanking,
    corpus: impl BufRead,
    n: usize,
    table: &NormalizationTable,
    stops: &StopwordList,
    lemmatizer: &impl Lemmatizer,
) -> Result<CoverageReport, CorpusError> {
    if n == 0 {
        return Err(CorpusError::ZeroN);
    }
    LemmaCounts::from_streams([corpus], table, stops, lemmatizer)?.coverage(ranking, n)
}
