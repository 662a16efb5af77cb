//! Word vector tables, cosine similarity, and exhaustive top-k ranking.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} values, found {found}")]
    Dimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: invalid number {value:?}")]
    Number { line: usize, value: String },
    #[error("zero vector for word {0:?}")]
    ZeroVector(String),
    #[error("zero-norm vector in cosine similarity")]
    ZeroNorm,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("word {0:?} is not in the embedding table")]
    UnknownWord(String),
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no vectors loaded")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense `|vocab| x dim` word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
    frozen: bool,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vocab: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            frozen: false,
        }
    }

    /// Appends a row; rejects duplicates, wrong lengths and zero vectors.
    pub fn push(&mut self, word: impl Into<String>, vector: &[T]) -> Result<(), EmbeddingError> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(EmbeddingError::LengthMismatch(vector.len(), self.dim));
        }
        if vector.iter().all(|v| v.is_zero()) {
            return Err(EmbeddingError::ZeroVector(word));
        }
        if self.index.contains_key(&word) {
            return Err(EmbeddingError::DuplicateWord(word));
        }
        self.index.insert(word.clone(), self.vocab.len());
        self.vocab.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn from_rows<S: Into<String>>(dim: usize, rows: impl IntoIterator<Item = (S, Vec<T>)>) -> Result<Self, EmbeddingError> {
        let mut table = Self::new(dim);
        for (w, v) in rows {
            table.push(w, &v)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn lookup(&self, word: &str) -> Option<&[T]> {
        self.id(word).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Mutable row access; `None` once the table is frozen.
    pub fn row_mut(&mut self, i: usize) -> Option<&mut [T]> {
        if self.frozen {
            return None;
        }
        Some(&mut self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Copy restricted to `words`, in the given order; unknown words are skipped.
    pub fn subset<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut out = Self::new(self.dim);
        for w in words {
            if let Some(v) = self.lookup(w) {
                if !out.contains(w) {
                    out.push(w, v).expect("rows of a valid table are valid");
                }
            }
        }
        out
    }

    pub fn convert<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            dim: self.dim,
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
            frozen: self.frozen,
        }
    }

    /// FNV-1a over words and the bit patterns of all values.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::util::Fnv1a::new();
        h.write_u64(self.dim as u64);
        for w in &self.vocab {
            h.write(w.as_bytes());
            h.write(&[0]);
        }
        for v in &self.data {
            h.write_u64(v.as_f64().to_bits());
        }
        h.finish()
    }

    /// Read the word-vector text format.
    ///
    /// An optional `COUNT DIM` header is accepted. Without one the dimension
    /// comes from the first row. With `filter`, rows for other words are
    /// skipped without being parsed. Repeated words keep their first row.
    pub fn read_text(reader: impl BufRead, filter: Option<&HashSet<String>>) -> Result<Self, EmbeddingError> {
        let mut dim: Option<usize> = None;
        let mut table: Option<Self> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if idx == 0 && values.len() == 1 {
                if let (Ok(_), Ok(d)) = (word.parse::<usize>(), values[0].parse::<usize>()) {
                    dim = Some(d);
                    continue;
                }
            }
            let d = *dim.get_or_insert(values.len());
            if values.len() != d {
                return Err(EmbeddingError::Dimension {
                    line: line_no,
                    expected: d,
                    found: values.len(),
                });
            }
            let table = table.get_or_insert_with(|| Self::new(d));
            if filter.is_some_and(|f| !f.contains(word)) {
                continue;
            }
            if table.contains(word) {
                log::warn!("line {line_no}: repeated word {word:?} ignored");
                continue;
            }
            let vector = values
                .iter()
                .map(|v| {
                    v.parse::<f64>().map(T::of).map_err(|_| EmbeddingError::Number {
                        line: line_no,
                        value: (*v).to_owned(),
                    })
                })
                .collect::<Result<Vec<T>, _>>()?;
            table.push(word, &vector)?;
        }
        match (table, dim) {
            (Some(t), _) => Ok(t),
            (None, Some(d)) => Ok(Self::new(d)),
            (None, None) => Err(EmbeddingError::Empty),
        }
    }

    pub fn load_text(path: impl AsRef<Path>, filter: Option<&HashSet<String>>) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(file), filter)
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch(a.len(), b.len()));
    }
    let denom = norm(a) * norm(b);
    if denom.is_zero() {
        return Err(EmbeddingError::ZeroNorm);
    }
    let c = dot(a, b) / denom;
    Ok(c.max(-T::one()).min(T::one()))
}

/// Ordered suggestions for one query vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking<T> {
    pub suggestions: Vec<(String, T)>,
    pub query: Vec<T>,
}

impl<T> Ranking<T> {
    /// 1-based position of `word` among the suggestions.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.suggestions.iter().position(|(w, _)| w == word).map(|p| p + 1)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.suggestions.iter().map(|(w, _)| w.as_str())
    }
}

/// Unit-normalised frozen vectors of the candidate output words, in
/// candidate (frequency rank) order.
#[derive(Debug, Clone)]
pub struct CandidateSet<T> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    units: Vec<T>,
    dim: usize,
}

impl<T: Scalar> CandidateSet<T> {
    pub fn new<S: AsRef<str>>(frozen: &EmbeddingTable<T>, candidates: &[S]) -> Result<Self, EmbeddingError> {
        if candidates.is_empty() {
            return Err(EmbeddingError::NoCandidates);
        }
        let dim = frozen.dim();
        let mut words = Vec::with_capacity(candidates.len());
        let mut index = HashMap::with_capacity(candidates.len());
        let mut units = Vec::with_capacity(candidates.len() * dim);
        for c in candidates {
            let c = c.as_ref();
            let v = frozen.lookup(c).ok_or_else(|| EmbeddingError::UnknownWord(c.to_owned()))?;
            if index.contains_key(c) {
                continue;
            }
            let n = norm(v);
            index.insert(c.to_owned(), words.len());
            words.push(c.to_owned());
            units.extend(v.iter().map(|&x| x / n));
        }
        Ok(Self { words, index, units, dim })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Cosine similarity of `query` to every candidate, in candidate order.
    pub fn similarities(&self, query: &[T]) -> Result<Vec<T>, EmbeddingError> {
        if query.len() != self.dim {
            return Err(EmbeddingError::LengthMismatch(query.len(), self.dim));
        }
        let qn = norm(query);
        if qn.is_zero() {
            return Err(EmbeddingError::ZeroNorm);
        }
        Ok(self
            .units
            .chunks_exact(self.dim)
            .map(|u| (dot(u, query) / qn).max(-T::one()).min(T::one()))
            .collect())
    }

    /// Top `k` candidates by cosine similarity; ties keep candidate order.
    pub fn rank(&self, query: &[T], k: usize) -> Result<Ranking<T>, EmbeddingError> {
        if k == 0 {
            return Err(EmbeddingError::ZeroK);
        }
        let sims = self.similarities(query)?;
        let mut order: Vec<usize> = (0..sims.len()).collect();
        order.sort_by(|&a, &b| sims[b].partial_cmp(&sims[a]).expect("similarities are finite").then(a.cmp(&b)));
        order.truncate(k);
        Ok(Ranking {
            suggestions: order.into_iter().map(|i| (self.words[i].clone(), sims[i])).collect(),
            query: query.to_vec(),
        })
    }
}

/// Rank `candidates` against `query` by exhaustive scan.
pub fn rank_candidates<T: Scalar, S: AsRef<str>>(
    query: &[T],
    frozen: &EmbeddingTable<T>,
    candidates: &[S],
    k: usize,
) -> Result<Ranking<T>, EmbeddingError> {
    CandidateSet::new(frozen, candidates)?.rank(query, k)
}
