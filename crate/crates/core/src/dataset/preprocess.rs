use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DatasetError, LexicalEntry};
use crate::text::{normalize_text, replace_pseudo_spaces, tokenize, NormalizationTable, StopwordList};

pub const DEFAULT_TOKEN_VOCAB_SIZE: usize = 100_000;

const MIN_PHRASE_TOKENS: usize = 3;
const MIN_WORD_CHARS: usize = 3;

/// Entry and phrase counts after each preprocessing stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts(pub Vec<StageCount>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub entries: usize,
    pub phrases: usize,
}

impl StageCounts {
    fn record(&mut self, stage: &str, entries: &[Working]) {
        self.0.push(StageCount {
            stage: stage.to_owned(),
            entries: entries.len(),
            phrases: entries.iter().map(|e| e.phrases.len()).sum(),
        });
    }

    pub fn get(&self, stage: &str) -> Option<&StageCount> {
        self.0.iter().find(|s| s.stage == stage)
    }
}

/// Recognised input tokens, most frequent first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenVocab {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

impl TokenVocab {
    /// Rank `counts` by descending frequency (ties by token) and keep `cap`.
    pub fn from_counts(counts: HashMap<String, u64>, cap: usize) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(cap);
        Self::from_entries(entries)
    }

    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let index = entries.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        Self { entries, index }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        for (t, c) in &self.entries {
            writeln!(out, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv(reader: impl BufRead) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let malformed = || DatasetError::Malformed {
                line: i + 1,
                reason: "expected token<TAB>count".into(),
            };
            let (tok, count) = line.split_once('\t').ok_or_else(malformed)?;
            entries.push((tok.to_owned(), count.parse().map_err(|_| malformed())?));
        }
        Ok(Self::from_entries(entries))
    }
}

/// Output of [`preprocess_entries`].
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub entries: Vec<LexicalEntry>,
    pub vocab: TokenVocab,
    pub stages: StageCounts,
}

struct Working {
    word: String,
    phrases: Vec<Vec<String>>,
    source: super::Source,
}

/// Clean entries for training.
///
/// Stages, in order: character normalisation, pseudo-space replacement,
/// self-definition removal, stopword headwords, stopwords inside phrases,
/// short phrases, short headwords, token vocabulary cap (out-of-vocabulary
/// tokens removed), short phrases again, and finally entries left without
/// phrases. Phrases in the result are tokens joined by single spaces.
pub fn preprocess_entries(
    entries: &[LexicalEntry],
    table: &NormalizationTable,
    stops: &StopwordList,
    token_vocab_size: usize,
) -> Preprocessed {
    let mut stages = StageCounts::default();
    let mut work: Vec<Working> = entries
        .iter()
        .map(|e| Working {
            word: e.word.clone(),
            phrases: e.phrases.iter().map(|p| vec![p.clone()]).collect(),
            source: e.source,
        })
        .collect();
    stages.record("input", &work);

    for e in &mut work {
        e.word = tokenize(&normalize_text(&e.word, table)).join();
        for p in &mut e.phrases {
            p[0] = normalize_text(&p[0], table);
        }
    }
    work.retain(|e| !e.word.is_empty());
    stages.record("normalize", &work);

    for e in &mut work {
        for p in &mut e.phrases {
            *p = tokenize(&replace_pseudo_spaces(&p[0])).into_inner();
        }
    }
    stages.record("pseudo_spaces", &work);

    for e in &mut work {
        let word_tokens = tokenize(&replace_pseudo_spaces(&e.word)).into_inner();
        for p in &mut e.phrases {
            remove_subsequence(p, &word_tokens);
        }
    }
    stages.record("self_definition", &work);

    work.retain(|e| !stops.contains(&e.word));
    stages.record("stopword_entries", &work);

    for e in &mut work {
        for p in &mut e.phrases {
            p.retain(|t| !stops.contains(t));
        }
    }
    stages.record("phrase_stopwords", &work);

    drop_short_phrases(&mut work);
    stages.record("short_phrases", &work);

    work.retain(|e| e.word.chars().count() >= MIN_WORD_CHARS);
    stages.record("short_words", &work);

    let mut counts: HashMap<String, u64> = HashMap::new();
    for p in work.iter().flat_map(|e| &e.phrases) {
        for t in p {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    let vocab = TokenVocab::from_counts(counts, token_vocab_size);
    for e in &mut work {
        for p in &mut e.phrases {
            p.retain(|t| vocab.contains(t));
        }
    }
    stages.record("token_vocab", &work);

    drop_short_phrases(&mut work);
    stages.record("short_phrases_after_vocab", &work);

    work.retain(|e| !e.phrases.is_empty());
    stages.record("empty_entries", &work);

    let entries = work
        .into_iter()
        .map(|e| LexicalEntry {
            word: e.word,
            phrases: e.phrases.into_iter().map(|p| p.join(" ")).collect(),
            source: e.source,
        })
        .collect();
    Preprocessed { entries, vocab, stages }
}

fn drop_short_phrases(work: &mut [Working]) {
    for e in work {
        e.phrases.retain(|p| p.len() >= MIN_PHRASE_TOKENS);
    }
}

/// Remove every non-overlapping occurrence of `needle` from `tokens`.
fn remove_subsequence(tokens: &mut Vec<String>, needle: &[String]) {
    if needle.is_empty() || tokens.len() < needle.len() {
        return;
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i..].starts_with(needle) {
            i += needle.len();
        } else {
            out.push(std::mem::take(&mut tokens[i]));
            i += 1;
        }
    }
    *tokens = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Source;

    fn latin() -> NormalizationTable {
        NormalizationTable::parse("KEEP\t0061-007A\n").unwrap()
    }

    fn run(entries: &[LexicalEntry], stops: &[&str], cap: usize) -> Preprocessed {
        let stops: StopwordList = stops.iter().copied().collect();
        preprocess_entries(entries, &latin(), &stops, cap)
    }

    #[test]
    fn self_definition_then_short_phrase() {
        let out = run(&[LexicalEntry::new("abc", ["abc x y"], Source::Amid)], &[], 100);
        assert!(out.entries.is_empty());
        assert_eq!(out.stages.get("self_definition").unwrap().phrases, 1);
        assert_eq!(out.stages.get("short_phrases").unwrap().phrases, 0);
    }

    #[test]
    fn short_word_dropped() {
        let out = run(&[LexicalEntry::new("ab", ["x y z"], Source::Amid)], &[], 100);
        assert!(out.entries.is_empty());
        assert_eq!(out.stages.get("short_words").unwrap().entries, 0);
    }

    #[test]
    fn oov_phrase_dropped() {
        let entries = [
            LexicalEntry::new("word", ["aa bb cc", "aa bb cc"], Source::Amid),
            LexicalEntry::new("other", ["xx yy zz"], Source::Amid),
        ];
        let out = run(&entries, &[], 3);
        assert_eq!(out.vocab.tokens().collect::<Vec<_>>(), ["aa", "bb", "cc"]);
        assert_eq!(out.entries.len(), 1);
        assert_eq!(out.entries[0].word, "word");
    }

    #[test]
    fn stopwords_removed_from_words_and_phrases() {
        let entries = [
            LexicalEntry::new("the", ["a b c"], Source::Amid),
            LexicalEntry::new("planet", ["the big round thing"], Source::Amid),
        ];
        let out = run(&entries, &["the"], 100);
        assert_eq!(out.entries, [LexicalEntry::new("planet", ["big round thing"], Source::Amid)]);
    }

    #[test]
    fn multi_token_headword_removed_as_unit() {
        let mut toks: Vec<String> = ["x", "ab", "cd", "y", "ab", "z"].map(String::from).into();
        remove_subsequence(&mut toks, &["ab".to_owned(), "cd".to_owned()]);
        assert_eq!(toks, ["x", "y", "ab", "z"]);
    }

    #[test]
    fn idempotent_on_its_own_output() {
        let entries = [
            LexicalEntry::new("wordy", ["wordy one two three", "a b"], Source::Amid),
            LexicalEntry::new("thing", ["one two three four", "three one five"], Source::Moin),
        ];
        let first = run(&entries, &["five"], 4);
        let second = run(&first.entries, &["five"], 4);
        assert_eq!(first.entries, second.entries);
    }
}
