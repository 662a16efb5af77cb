//! Mean opinion scores and suggestion quality.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::kappa::{filter_valid_raters, RatingMatrix};
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ItemKind {
    #[serde(rename = "original")]
    Original,
    #[serde(rename = "suggestion_1")]
    Suggestion1,
    #[serde(rename = "suggestion_2")]
    Suggestion2,
    #[serde(rename = "suggestion_3")]
    Suggestion3,
}

impl ItemKind {
    pub const ALL: [ItemKind; 4] = [ItemKind::Original, ItemKind::Suggestion1, ItemKind::Suggestion2, ItemKind::Suggestion3];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Original => "original",
            ItemKind::Suggestion1 => "suggestion_1",
            ItemKind::Suggestion2 => "suggestion_2",
            ItemKind::Suggestion3 => "suggestion_3",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rated item: a suggestion or the original word for a phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub kind: ItemKind,
    pub phrase: String,
    pub word: String,
    /// Dictionary the phrase came from. Raters are validated separately for
    /// each source, since each source is rated as its own list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// JSON Lines manifest; blank lines are skipped.
pub fn read_manifest(reader: impl BufRead) -> Result<Vec<ManifestItem>, EvalError> {
    let mut items = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: n + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(items)
}

/// Mean score of `item` over the raters in `matrix`.
pub fn mean_opinion_score(matrix: &RatingMatrix, item: &str) -> Result<f64, EvalError> {
    let scores = matrix.item_scores(item);
    if scores.is_empty() {
        return Err(EvalError::NoScores(item.to_owned()));
    }
    Ok(scores.iter().map(|&s| s as f64).sum::<f64>() / scores.len() as f64)
}

/// Mean MOS over the manifest items of one kind: `q_t` for originals,
/// `q_i` for i-th suggestions.
pub fn suggestion_quality(matrix: &RatingMatrix, manifest: &[ManifestItem], kind: ItemKind) -> Result<f64, EvalError> {
    let group: Vec<&ManifestItem> = manifest.iter().filter(|m| m.kind == kind).collect();
    if group.is_empty() {
        return Err(EvalError::EmptyGroup(kind.to_string()));
    }
    let mut total = 0.0;
    for item in &group {
        total += mean_opinion_score(matrix, &item.item_id)?;
    }
    Ok(total / group.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub source: Option<String>,
    pub raters: usize,
    pub valid_raters: usize,
    pub q_t: Option<f64>,
    pub q_1: Option<f64>,
    pub q_2: Option<f64>,
    pub q_3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosReport {
    pub threshold: f64,
    pub rows: Vec<QualityRow>,
}

/// Validates raters and computes `q_t, q_1, q_2, q_3` for each source in the
/// manifest (one row when no item names a source).
pub fn mos_report(matrix: &RatingMatrix, manifest: &[ManifestItem], threshold: f64) -> Result<MosReport, EvalError> {
    if manifest.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut groups: BTreeMap<Option<&str>, Vec<ManifestItem>> = BTreeMap::new();
    for item in manifest {
        groups.entry(item.source.as_deref()).or_default().push(item.clone());
    }
    let mut rows = Vec::new();
    for (source, items) in groups {
        let ids: Vec<&str> = items.iter().map(|m| m.item_id.as_str()).collect();
        let sub = matrix.with_items(&ids);
        let valid = filter_valid_raters(&sub, threshold)?;
        let q = |kind| {
            if items.iter().any(|m| m.kind == kind) {
                suggestion_quality(&valid, &items, kind).map(Some)
            } else {
                Ok(None)
            }
        };
        rows.push(QualityRow {
            source: source.map(str::to_owned),
            raters: sub.raters().len(),
            valid_raters: valid.raters().len(),
            q_t: q(ItemKind::Original)?,
            q_1: q(ItemKind::Suggestion1)?,
            q_2: q(ItemKind::Suggestion2)?,
            q_3: q(ItemKind::Suggestion3)?,
        });
    }
    Ok(MosReport { threshold, rows })
}

impl MosReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} | {:>6} | {:>5} | {:>5} | {:>5} | {:>5}",
            "source", "raters", "q_t", "q_1", "q_2", "q_3"
        );
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.1}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} | {:>6} | {:>5} | {:>5} | {:>5} | {:>5}",
                r.source.as_deref().unwrap_or("all"),
                format!("{}/{}", r.valid_raters, r.raters),
                cell(r.q_t),
                cell(r.q_1),
                cell(r.q_2),
                cell(r.q_3)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, kind: ItemKind) -> ManifestItem {
        ManifestItem {
            item_id: id.into(),
            kind,
            phrase: "p".into(),
            word: "w".into(),
            source: None,
        }
    }

    #[test]
    fn mos_values() {
        let m = RatingMatrix::from_triples([("r1", "a", 4), ("r1", "b", 1), ("r2", "b", 5)]).unwrap();
        assert_eq!(mean_opinion_score(&m, "a").unwrap(), 4.0);
        assert_eq!(mean_opinion_score(&m, "b").unwrap(), 3.0);
        assert!(matches!(mean_opinion_score(&m, "zzz"), Err(EvalError::NoScores(_))));
    }

    #[test]
    fn quality_is_mean_of_item_mos() {
        let m = RatingMatrix::from_triples([("r1", "a", 2), ("r1", "b", 3), ("r1", "c", 5)]).unwrap();
        let manifest = vec![item("a", ItemKind::Suggestion1), item("b", ItemKind::Suggestion1), item("c", ItemKind::Original)];
        assert_eq!(suggestion_quality(&m, &manifest, ItemKind::Suggestion1).unwrap(), 2.5);
        assert_eq!(suggestion_quality(&m, &manifest, ItemKind::Original).unwrap(), 5.0);
        assert!(matches!(
            suggestion_quality(&m, &manifest, ItemKind::Suggestion3),
            Err(EvalError::EmptyGroup(_))
        ));
    }

    #[test]
    fn manifest_parsing() {
        let text = r#"{"item_id": "1", "kind": "suggestion_2", "phrase": "x y", "word": "z"}

{"item_id": "2", "kind": "original", "phrase": "x y", "word": "w", "source": "amid"}
"#;
        let items = read_manifest(text.as_bytes()).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].kind, ItemKind::Suggestion2);
        assert_eq!(items[1].source.as_deref(), Some("amid"));
        assert!(read_manifest(r#"{"item_id": "1", "kind": "suggestion_9", "phrase": "", "word": ""}"#.as_bytes()).is_err());
    }
}
