use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DatasetError, LexicalEntry};
use crate::text::{normalize_text, replace_pseudo_spaces, tokenize, NormalizationTable};

/// Directed synonym relation: `get(w)` are the words accepted in place of `w`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymSet(BTreeMap<String, BTreeSet<String>>);

impl SynonymSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `synonym` to the synonyms of `word`; self pairs are ignored.
    pub fn insert(&mut self, word: &str, synonym: &str) {
        if word != synonym {
            self.0.entry(word.to_owned()).or_default().insert(synonym.to_owned());
        }
    }

    pub fn get(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.0.get(word)
    }

    pub fn contains(&self, word: &str, synonym: &str) -> bool {
        self.0.get(word).is_some_and(|s| s.contains(synonym))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// JSON object mapping each word to an array of words.
    pub fn read_json(reader: impl Read) -> Result<Self, DatasetError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_reader(reader).map_err(|e| DatasetError::Malformed {
            line: e.line(),
            reason: e.to_string(),
        })?;
        let mut set = Self::new();
        for (w, syns) in &raw {
            for s in syns {
                set.insert(w, s);
            }
        }
        Ok(set)
    }

    pub fn write_json(&self, out: impl Write) -> std::io::Result<()> {
        serde_json::to_writer(out, self).map_err(std::io::Error::other)
    }
}

/// Dictionary synonyms plus one-word definitions.
///
/// A phrase of `w2`'s entry that consists of a single word `w1` makes `w1` a
/// synonym of `w2`. Words from both sources are normalised with `table`.
pub fn build_integral_synonyms(
    dictionary: &SynonymSet,
    entries: &[LexicalEntry],
    table: &NormalizationTable,
) -> SynonymSet {
    let norm = |s: &str| tokenize(&normalize_text(s, table)).join();
    let mut out = SynonymSet::new();
    for (w, syns) in dictionary.iter() {
        for s in syns {
            out.insert(&norm(w), &norm(s));
        }
    }
    for e in entries {
        let word = norm(&e.word);
        if word.is_empty() {
            continue;
        }
        for p in &e.phrases {
            let toks = tokenize(&replace_pseudo_spaces(&normalize_text(p, table)));
            if toks.len() == 1 {
                out.insert(&word, &toks.tokens()[0]);
            }
        }
    }
    out.0.retain(|_, v| !v.is_empty());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Source;

    fn latin() -> NormalizationTable {
        NormalizationTable::parse("KEEP\t0030-0039\nKEEP\t0061-007A\n").unwrap()
    }

    #[test]
    fn one_word_phrase_becomes_synonym() {
        let entries = [LexicalEntry::new("w2", ["w1", "some longer phrase"], Source::Amid)];
        let s = build_integral_synonyms(&SynonymSet::new(), &entries, &latin());
        assert!(s.contains("w2", "w1"));
        assert!(!s.contains("w1", "w2"));
    }

    #[test]
    fn dictionary_only() {
        let mut dict = SynonymSet::new();
        dict.insert("a", "b");
        let s = build_integral_synonyms(&dict, &[], &latin());
        assert_eq!(s.get("a").unwrap().iter().collect::<Vec<_>>(), ["b"]);
    }

    #[test]
    fn no_self_synonyms() {
        let entries = [LexicalEntry::new("w", ["w"], Source::Amid)];
        assert!(build_integral_synonyms(&SynonymSet::new(), &entries, &latin()).is_empty());
        let dict = SynonymSet::read_json(r#"{"a":["a","b"]}"#.as_bytes()).unwrap();
        assert!(!dict.contains("a", "a"));
    }

    #[test]
    fn json_round_trip() {
        let dict = SynonymSet::read_json(r#"{"b":["c"],"a":["z","y"]}"#.as_bytes()).unwrap();
        let mut buf = Vec::new();
        dict.write_json(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), r#"{"a":["y","z"],"b":["c"]}"#);
        assert_eq!(SynonymSet::read_json(buf.as_slice()).unwrap(), dict);
    }
}
