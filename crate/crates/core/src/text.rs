//! Character and token level normalisation of Persian text.
//!
//! The pipeline is: [`normalize_text`] (map Arabic forms to Persian ones and
//! strip everything outside the keep set), [`replace_pseudo_spaces`],
//! [`tokenize`], and [`remove_stopwords`]. All functions are pure.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

/// Zero-width non-joiner, written inside Persian compounds.
pub const PSEUDO_SPACE: char = '\u{200C}';

const DEFAULT_TABLE: &str = include_str!("../data/normalization.tsv");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Persian letters kept by the default keep set.
const PERSIAN_LETTERS: &[char] = &[
    '\u{0621}', '\u{0622}', '\u{0626}', '\u{0627}', '\u{0628}', '\u{067E}', '\u{062A}', '\u{062B}',
    '\u{062C}', '\u{0686}', '\u{062D}', '\u{062E}', '\u{062F}', '\u{0630}', '\u{0631}', '\u{0632}',
    '\u{0698}', '\u{0633}', '\u{0634}', '\u{0635}', '\u{0636}', '\u{0637}', '\u{0638}', '\u{0639}',
    '\u{063A}', '\u{0641}', '\u{0642}', '\u{06A9}', '\u{06AF}', '\u{0644}', '\u{0645}', '\u{0646}',
    '\u{0648}', '\u{0647}', '\u{06CC}',
];

#[derive(Debug, Error)]
pub enum TextError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },
    #[error("normalization table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Set of code points that survive normalisation.
///
/// Whitespace and the pseudo-space are always kept; the pseudo-space is
/// turned into a space later by [`replace_pseudo_spaces`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeepSet {
    ranges: Vec<(char, char)>,
}

impl KeepSet {
    /// Persian letters and Persian digits.
    pub fn persian() -> Self {
        let mut ranges: Vec<(char, char)> = PERSIAN_LETTERS.iter().map(|&c| (c, c)).collect();
        ranges.push(('\u{06F0}', '\u{06F9}'));
        Self { ranges }
    }

    pub fn empty() -> Self {
        Self { ranges: Vec::new() }
    }

    pub fn add_range(&mut self, start: char, end: char) {
        self.ranges.push((start.min(end), start.max(end)));
    }

    pub fn contains(&self, c: char) -> bool {
        c.is_whitespace() || c == PSEUDO_SPACE || self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi)
    }
}

/// Code point mapping plus keep set.
///
/// Construction rejects tables that would not be idempotent: a source may
/// appear only once, no target may itself be a source, and every target must
/// be in the keep set.
#[derive(Debug, Clone)]
pub struct NormalizationTable {
    mappings: HashMap<char, Option<char>>,
    keep: KeepSet,
}

impl NormalizationTable {
    pub fn new(mappings: impl IntoIterator<Item = (char, Option<char>)>, keep: KeepSet) -> Result<Self, TextError> {
        let mut map = HashMap::new();
        for (i, (src, dst)) in mappings.into_iter().enumerate() {
            if map.insert(src, dst).is_some() {
                return Err(TextError::Table {
                    line: i + 1,
                    reason: format!("duplicate source U+{:04X}", src as u32),
                });
            }
        }
        let table = Self { mappings: map, keep };
        table.validate()?;
        Ok(table)
    }

    /// The bundled Arabic-to-Persian table with the Persian keep set.
    pub fn persian_default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled normalization table is valid")
    }

    /// Parse the tab-separated table format.
    ///
    /// `SRC_HEX<TAB>DST_HEX`, `SRC_HEX<TAB>DELETE`, and `KEEP<TAB>START[-END]`
    /// lines; `#` starts a comment. KEEP lines extend the Persian keep set.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut mappings = HashMap::new();
        let mut keep = KeepSet::persian();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| TextError::Table { line: line_no, reason };
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let (Some(left), Some(right), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("expected two tab-separated fields, got {line:?}")));
            };
            if left.eq_ignore_ascii_case("KEEP") {
                let (start, end) = match right.split_once('-') {
                    Some((a, b)) => (parse_hex_char(a).map_err(&err)?, parse_hex_char(b).map_err(&err)?),
                    None => {
                        let c = parse_hex_char(right).map_err(&err)?;
                        (c, c)
                    }
                };
                keep.add_range(start, end);
                continue;
            }
            let src = parse_hex_char(left).map_err(&err)?;
            let dst = if right.eq_ignore_ascii_case("DELETE") {
                None
            } else {
                Some(parse_hex_char(right).map_err(&err)?)
            };
            if mappings.insert(src, dst).is_some() {
                return Err(err(format!("duplicate source U+{:04X}", src as u32)));
            }
        }
        let table = Self { mappings, keep };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), TextError> {
        let mut sources: Vec<_> = self.mappings.iter().collect();
        sources.sort();
        for (&src, &dst) in sources {
            let Some(dst) = dst else { continue };
            let reason = if self.mappings.contains_key(&dst) {
                format!("target U+{:04X} of U+{:04X} is itself mapped", dst as u32, src as u32)
            } else if !self.keep.contains(dst) {
                format!("target U+{:04X} of U+{:04X} is outside the keep set", dst as u32, src as u32)
            } else {
                continue;
            };
            return Err(TextError::Table { line: 0, reason });
        }
        Ok(())
    }

    pub fn keep_set(&self) -> &KeepSet {
        &self.keep
    }

    /// Normalised form of a single code point, `None` when it is removed.
    pub fn map_char(&self, c: char) -> Option<char> {
        let mapped = match self.mappings.get(&c) {
            Some(&target) => target?,
            None => c,
        };
        self.keep.contains(mapped).then_some(mapped)
    }
}

fn parse_hex_char(field: &str) -> Result<char, String> {
    let digits = field
        .strip_prefix("U+")
        .or_else(|| field.strip_prefix("u+"))
        .or_else(|| field.strip_prefix("0x"))
        .unwrap_or(field);
    let value = u32::from_str_radix(digits, 16).map_err(|_| format!("invalid hex code point {field:?}"))?;
    char::from_u32(value).ok_or_else(|| format!("U+{value:04X} is not a scalar value"))
}

/// Apply the table: map each code point, drop everything outside the keep set.
pub fn normalize_text(raw: &str, table: &NormalizationTable) -> String {
    raw.chars().filter_map(|c| table.map_char(c)).collect()
}

/// Like [`normalize_text`] for raw bytes; reports the offset of the first
/// invalid UTF-8 sequence.
pub fn normalize_bytes(raw: &[u8], table: &NormalizationTable) -> Result<String, TextError> {
    let text = std::str::from_utf8(raw).map_err(|e| TextError::Decode { offset: e.valid_up_to() })?;
    Ok(normalize_text(text, table))
}

pub fn replace_pseudo_spaces(raw: &str) -> String {
    raw.replace(PSEUDO_SPACE, " ")
}

/// Ordered, non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Builds a sequence, splitting any token that contains whitespace.
    pub fn new<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Self(
            tokens
                .into_iter()
                .flat_map(|t| t.as_ref().split_whitespace().map(str::to_owned).collect::<Vec<_>>())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.0.retain(|t| keep(t));
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(text.split_whitespace().map(str::to_owned).collect())
}

/// Set of normalised stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Entries are normalised with `table`; blank lines and `#` comments are
    /// skipped. Entries that normalise to several tokens are ignored since
    /// stopword removal works per token.
    pub fn from_reader(reader: impl BufRead, table: &NormalizationTable) -> Result<Self, std::io::Error> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let norm = replace_pseudo_spaces(&normalize_text(line, table));
            let mut toks = norm.split_whitespace();
            match (toks.next(), toks.next()) {
                (Some(word), None) => {
                    words.insert(word.to_owned());
                }
                (Some(_), Some(_)) => log::warn!("ignoring multi-token stopword {line:?}"),
                _ => {}
            }
        }
        Ok(Self { words })
    }

    pub fn load(path: impl AsRef<Path>, table: &NormalizationTable) -> Result<Self, TextError> {
        let path = path.as_ref();
        let io_err = |source| TextError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::open(path).map_err(io_err)?;
        Self::from_reader(std::io::BufReader::new(file), table).map_err(io_err)
    }

    /// The bundled list of common Persian function words.
    pub fn persian_default() -> Self {
        Self::from_reader(DEFAULT_STOPWORDS.as_bytes(), &NormalizationTable::persian_default())
            .expect("reading from memory cannot fail")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopwordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            words: iter.into_iter().map(Into::into).collect(),
        }
    }
}

pub fn remove_stopwords(mut seq: TokenSequence, stops: &StopwordList) -> TokenSequence {
    if !stops.is_empty() {
        seq.retain(|t| !stops.contains(t));
    }
    seq
}

/// Normalise, split pseudo-spaces and tokenize in one pass.
pub fn normalized_tokens(raw: &str, table: &NormalizationTable) -> TokenSequence {
    tokenize(&replace_pseudo_spaces(&normalize_text(raw, table)))
}
