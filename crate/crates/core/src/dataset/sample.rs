use rand::Rng;

use super::{DatasetError, DefinitionTuple};
use crate::corpus::FrequencyRanking;
use crate::rng;

/// At most one tuple per word-rank bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedSample {
    pub tuples: Vec<DefinitionTuple>,
    /// 1-based bucket of each drawn tuple, ascending.
    pub buckets: Vec<usize>,
    pub s: usize,
    pub seed: u64,
}

/// Bucket (1-based) holding word rank `rank` when ranks `1..=n` are cut into
/// `s` contiguous intervals `((i-1)n/s, i*n/s]`.
pub fn bucket_of(rank: usize, s: usize, n: usize) -> usize {
    let (rank, s, n) = (rank as u128, s as u128, n as u128);
    ((rank * s).div_ceil(n)) as usize
}

/// Draw one tuple uniformly from every non-empty bucket.
///
/// Buckets are visited in ascending order and empty ones consume no
/// randomness, so the result depends only on `tuples`, `seed`, `s` and `n`.
pub fn stratified_sample(
    tuples: &[DefinitionTuple],
    ranking: &FrequencyRanking,
    s: usize,
    n: usize,
    seed: u64,
) -> Result<StratifiedSample, DatasetError> {
    if s == 0 {
        return Err(DatasetError::ZeroBuckets);
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); s];
    for (i, t) in tuples.iter().enumerate() {
        let rank = ranking
            .rank(&t.word)
            .filter(|&r| r <= n)
            .ok_or_else(|| DatasetError::UnrankedWord(t.word.clone()))?;
        buckets[bucket_of(rank, s, n) - 1].push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut sample = StratifiedSample {
        tuples: Vec::new(),
        buckets: Vec::new(),
        s,
        seed,
    };
    for (b, members) in buckets.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let pick = members[rng.random_range(0..members.len())];
        sample.tuples.push(tuples[pick].clone());
        sample.buckets.push(b + 1);
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_ranking;
    use crate::dataset::Source;
    use crate::text::{tokenize, NormalizationTable};

    fn toy_ranking() -> FrequencyRanking {
        let table = NormalizationTable::parse("KEEP\t0061-007A\n").unwrap();
        build_ranking(["a a a a a b b b b c c c d d e".as_bytes()], &table).unwrap()
    }

    fn tuple(word: &str, tag: &str) -> DefinitionTuple {
        DefinitionTuple::new(tokenize(&format!("{tag} x y")), word, Source::Amid)
    }

    #[test]
    fn buckets_partition_ranks() {
        for (s, n) in [(1, 5), (2, 5), (3, 7), (5, 5), (4, 10), (500, 3000), (7, 3)] {
            let mut prev = 1;
            for r in 1..=n {
                let b = bucket_of(r, s, n);
                assert!(b >= prev && b <= s, "s={s} n={n} r={r}");
                assert!((b - 1) * n < r * s && r * s <= b * n);
                prev = b;
            }
            assert_eq!(bucket_of(n, s, n), s);
        }
    }

    #[test]
    fn one_tuple_per_rank_is_fully_sampled() {
        let r = toy_ranking();
        let tuples: Vec<_> = ["e", "c", "a", "d", "b"].iter().map(|w| tuple(w, "t")).collect();
        let sample = stratified_sample(&tuples, &r, 5, 5, 9).unwrap();
        let words: Vec<_> = sample.tuples.iter().map(|t| t.word.as_str()).collect();
        assert_eq!(words, ["a", "b", "c", "d", "e"]);
        assert_eq!(sample.buckets, [1, 2, 3, 4, 5]);
    }

    #[test]
    fn single_bucket_draws_one() {
        let r = toy_ranking();
        let tuples: Vec<_> = ["a", "b", "c"].iter().map(|w| tuple(w, "t")).collect();
        let sample = stratified_sample(&tuples, &r, 1, 5, 1).unwrap();
        assert_eq!(sample.tuples.len(), 1);
        assert!(tuples.contains(&sample.tuples[0]));
    }

    #[test]
    fn empty_buckets_are_skipped_and_seed_is_deterministic() {
        let r = toy_ranking();
        let tuples: Vec<_> = (0..6).map(|i| tuple(if i % 2 == 0 { "a" } else { "e" }, &format!("t{i}"))).collect();
        let a = stratified_sample(&tuples, &r, 5, 5, 4).unwrap();
        assert_eq!(a.buckets, [1, 5]);
        assert_eq!(a, stratified_sample(&tuples, &r, 5, 5, 4).unwrap());
    }

    #[test]
    fn errors() {
        let r = toy_ranking();
        assert!(matches!(
            stratified_sample(&[], &r, 0, 5, 0),
            Err(DatasetError::ZeroBuckets)
        ));
        assert!(matches!(
            stratified_sample(&[tuple("e", "t")], &r, 2, 4, 0),
            Err(DatasetError::UnrankedWord(_))
        ));
    }
}
