use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DefinitionTuple};
use crate::corpus::FrequencyRanking;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<DefinitionTuple>,
    pub dev: Vec<DefinitionTuple>,
    pub test: Vec<DefinitionTuple>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Random 8:1:1 split of the dictionary tuples.
///
/// Dev and test each receive `floor(N / 10)` of the `N` dictionary tuples
/// and training gets the remainder; each part keeps input order. Tuples
/// from auxiliary sources (Wikipedia, Farsnet) are then appended to train.
pub fn split_811(tuples: &[DefinitionTuple], seed: u64) -> Result<DatasetSplit, DatasetError> {
    let (aux, dict): (Vec<usize>, Vec<usize>) = (0..tuples.len()).partition(|&i| tuples[i].source.is_auxiliary());
    let n = dict.len();
    if n < 10 {
        return Err(DatasetError::TooFewTuples(n));
    }
    let mut order = dict;
    order.shuffle(&mut rng::seeded(seed));
    let tenth = n / 10;
    let mut dev_idx = order[..tenth].to_vec();
    let mut test_idx = order[tenth..2 * tenth].to_vec();
    let mut train_idx = order[2 * tenth..].to_vec();
    for part in [&mut dev_idx, &mut test_idx, &mut train_idx] {
        part.sort_unstable();
    }
    train_idx.extend(aux);
    let pick = |idx: &[usize]| idx.iter().map(|&i| tuples[i].clone()).collect();
    Ok(DatasetSplit {
        train: pick(&train_idx),
        dev: pick(&dev_idx),
        test: pick(&test_idx),
        seed,
    })
}

/// Keep only tuples whose word ranks within the top `n`.
pub fn restrict_to_top_words(split: &DatasetSplit, ranking: &FrequencyRanking, n: usize) -> DatasetSplit {
    let keep = |tuples: &[DefinitionTuple]| {
        tuples
            .iter()
            .filter(|t| ranking.rank(&t.word).is_some_and(|r| r <= n))
            .cloned()
            .collect()
    };
    DatasetSplit {
        train: keep(&split.train),
        dev: keep(&split.dev),
        test: keep(&split.test),
        seed: split.seed,
    }
}
