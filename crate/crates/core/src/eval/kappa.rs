//! Linear-weighted Cohen's kappa and rater validation.

use std::collections::HashMap;
use std::io::Read;

use log::warn;
use serde::Deserialize;

use super::EvalError;

/// Scores run from 1 to this value.
pub const KAPPA_CATEGORIES: u8 = 5;

/// Minimum mean kappa for a rater to count as valid ("moderate agreement").
pub const VALID_RATER_THRESHOLD: f64 = 0.41;

fn check_score(s: i64) -> Result<u8, EvalError> {
    if (1..=KAPPA_CATEGORIES as i64).contains(&s) {
        Ok(s as u8)
    } else {
        Err(EvalError::ScoreOutOfRange(s))
    }
}

/// `1 - sum(d O) / sum(d E)` with disagreement weights `d_ij = |i - j| / 4`.
///
/// Computed from integer contingency counts, so the only rounding is the
/// final division. Two raters who both give one identical score throughout
/// agree perfectly (1.0). Two raters who are each constant but differ have no
/// meaningful chance correction and produce an error.
pub fn linear_weighted_kappa(a: &[u8], b: &[u8]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let k = KAPPA_CATEGORIES as usize;
    let mut observed = vec![0u64; k * k];
    let mut rows = vec![0u64; k];
    let mut cols = vec![0u64; k];
    for (&x, &y) in a.iter().zip(b) {
        let i = check_score(x as i64)? as usize - 1;
        let j = check_score(y as i64)? as usize - 1;
        observed[i * k + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    let n = a.len() as u64;
    let constant = |m: &[u64]| m.iter().filter(|&&c| c > 0).count() == 1;
    if constant(&rows) && constant(&cols) && a[0] != b[0] {
        return Err(EvalError::UndefinedKappa("both raters are constant but disagree"));
    }
    let mut num = 0u64;
    let mut den = 0u64;
    for i in 0..k {
        for j in 0..k {
            let d = i.abs_diff(j) as u64;
            num += d * observed[i * k + j];
            den += d * rows[i] * cols[j];
        }
    }
    let num = num * n;
    match (num, den) {
        (0, 0) => Ok(1.0),
        (_, 0) => Err(EvalError::UndefinedKappa("no expected disagreement")),
        _ => Ok(1.0 - num as f64 / den as f64),
    }
}

/// Scores of raters (rows) on items (columns); cells may be missing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RatingMatrix {
    raters: Vec<String>,
    items: Vec<String>,
    scores: Vec<Vec<Option<u8>>>,
}

#[derive(Deserialize)]
struct RatingRow {
    rater_id: String,
    item_id: String,
    score: i64,
}

impl RatingMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    fn rater_slot(&mut self, rater: &str) -> usize {
        match self.raters.iter().position(|r| r == rater) {
            Some(i) => i,
            None => {
                self.raters.push(rater.to_owned());
                self.scores.push(vec![None; self.items.len()]);
                self.raters.len() - 1
            }
        }
    }

    fn item_slot(&mut self, item: &str) -> usize {
        match self.items.iter().position(|i| i == item) {
            Some(i) => i,
            None => {
                self.items.push(item.to_owned());
                for row in &mut self.scores {
                    row.push(None);
                }
                self.items.len() - 1
            }
        }
    }

    /// Records a score. Raters and items are added in first-seen order.
    pub fn insert(&mut self, rater: &str, item: &str, score: i64) -> Result<(), EvalError> {
        let score = check_score(score)?;
        let r = self.rater_slot(rater);
        let i = self.item_slot(item);
        let cell = &mut self.scores[r][i];
        if cell.is_some() {
            return Err(EvalError::DuplicateScore {
                rater: rater.to_owned(),
                item: item.to_owned(),
            });
        }
        *cell = Some(score);
        Ok(())
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, i64)>) -> Result<Self, EvalError> {
        let mut m = Self::new();
        for (r, i, s) in triples {
            m.insert(r, i, s)?;
        }
        Ok(m)
    }

    /// CSV with header `rater_id,item_id,score`.
    pub fn read_csv(reader: impl Read) -> Result<Self, EvalError> {
        let mut m = Self::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for row in rdr.deserialize() {
            let row: RatingRow = row?;
            m.insert(&row.rater_id, &row.item_id, row.score)?;
        }
        Ok(m)
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn score(&self, rater: usize, item: usize) -> Option<u8> {
        self.scores[rater][item]
    }

    pub fn rater_index(&self, rater: &str) -> Option<usize> {
        self.raters.iter().position(|r| r == rater)
    }

    pub fn item_index(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }

    /// Scores given to `item` by every rater who scored it.
    pub fn item_scores(&self, item: &str) -> Vec<u8> {
        match self.item_index(item) {
            Some(i) => self.scores.iter().filter_map(|row| row[i]).collect(),
            None => Vec::new(),
        }
    }

    /// The paired scores of two raters over the items both scored.
    pub fn shared(&self, a: usize, b: usize) -> (Vec<u8>, Vec<u8>) {
        self.scores[a]
            .iter()
            .zip(&self.scores[b])
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .unzip()
    }

    /// Matrix restricted to the named raters, in their original order.
    pub fn with_raters(&self, keep: &[&str]) -> Self {
        let rows: Vec<usize> = (0..self.raters.len()).filter(|&r| keep.contains(&self.raters[r].as_str())).collect();
        Self {
            raters: rows.iter().map(|&r| self.raters[r].clone()).collect(),
            items: self.items.clone(),
            scores: rows.iter().map(|&r| self.scores[r].clone()).collect(),
        }
    }

    /// Matrix restricted to the named items; raters left with no score are
    /// removed.
    pub fn with_items(&self, keep: &[&str]) -> Self {
        let cols: Vec<usize> = (0..self.items.len()).filter(|&i| keep.contains(&self.items[i].as_str())).collect();
        let mut out = Self {
            raters: Vec::new(),
            items: cols.iter().map(|&i| self.items[i].clone()).collect(),
            scores: Vec::new(),
        };
        for (r, row) in self.scores.iter().enumerate() {
            let new_row: Vec<Option<u8>> = cols.iter().map(|&i| row[i]).collect();
            if new_row.iter().any(Option::is_some) {
                out.raters.push(self.raters[r].clone());
                out.scores.push(new_row);
            }
        }
        out
    }
}

/// Kappa of a pair over shared items, or `None` when the pair has no shared
/// items or kappa is undefined for it.
fn pair_kappa(m: &RatingMatrix, a: usize, b: usize) -> Option<f64> {
    let (x, y) = m.shared(a, b);
    if x.is_empty() {
        return None;
    }
    match linear_weighted_kappa(&x, &y) {
        Ok(k) => Some(k),
        Err(e) => {
            warn!("skipping rater pair {} / {}: {e}", m.raters[a], m.raters[b]);
            None
        }
    }
}

/// Mean kappa of `rater` against every other rater. Pairs without shared
/// items, or with undefined kappa, are left out of the mean.
pub fn rater_agreement(matrix: &RatingMatrix, rater: &str) -> Result<f64, EvalError> {
    let r = matrix.rater_index(rater).ok_or_else(|| EvalError::UnknownRater(rater.to_owned()))?;
    if matrix.raters.len() < 2 {
        return Err(EvalError::TooFewRaters);
    }
    let kappas: Vec<f64> = (0..matrix.raters.len())
        .filter(|&o| o != r)
        .filter_map(|o| pair_kappa(matrix, r, o))
        .collect();
    if kappas.is_empty() {
        return Err(EvalError::NoComparableRaters(rater.to_owned()));
    }
    Ok(kappas.iter().sum::<f64>() / kappas.len() as f64)
}

/// Keeps raters whose agreement with all others is at least `threshold`.
/// Agreements are computed once against the full matrix.
pub fn filter_valid_raters(matrix: &RatingMatrix, threshold: f64) -> Result<RatingMatrix, EvalError> {
    if matrix.raters.len() < 2 {
        return Err(EvalError::TooFewRaters);
    }
    let n = matrix.raters.len();
    let mut pairs: HashMap<(usize, usize), Option<f64>> = HashMap::new();
    for a in 0..n {
        for b in a + 1..n {
            pairs.insert((a, b), pair_kappa(matrix, a, b));
        }
    }
    let mut keep = Vec::new();
    for r in 0..n {
        let kappas: Vec<f64> = (0..n)
            .filter(|&o| o != r)
            .filter_map(|o| pairs[&(r.min(o), r.max(o))])
            .collect();
        if kappas.is_empty() {
            return Err(EvalError::NoComparableRaters(matrix.raters[r].clone()));
        }
        let agreement = kappas.iter().sum::<f64>() / kappas.len() as f64;
        if agreement >= threshold {
            keep.push(matrix.raters[r].as_str());
        }
    }
    if keep.is_empty() {
        return Err(EvalError::AllRatersDropped);
    }
    Ok(matrix.with_raters(&keep))
}
