//! Comparison classifiers: label-frequency sampling and bag-of-words KNN.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};

use crate::corpus::{DdiTriple, TokenSequence, Vocabulary};
use crate::metrics::{evaluate, MetricsReport};
use crate::{seeds, Error, Result};

/// Empirical label frequencies of the training triples.
#[derive(Debug, Clone)]
pub struct LabelDistribution {
    counts: Vec<usize>,
    sampler: WeightedIndex<usize>,
}

impl LabelDistribution {
    pub fn fit(train: &[DdiTriple], num_labels: usize) -> Result<Self> {
        let mut counts = vec![0; num_labels];
        for t in train {
            *counts
                .get_mut(t.label)
                .ok_or_else(|| Error::InvalidArgument(format!("label {} out of range", t.label)))? += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let sampler = WeightedIndex::new(&counts).map_err(|_| Error::EmptyInput)?;
        Ok(LabelDistribution { counts, sampler })
    }

    pub fn num_labels(&self) -> usize {
        self.counts.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}

/// Mean report over `num_simulations` independent draws of one label per
/// evaluation pair.
pub fn random_predict(
    dist: &LabelDistribution,
    eval: &[DdiTriple],
    seed: u64,
    num_simulations: usize,
) -> Result<MetricsReport> {
    if num_simulations == 0 {
        return Err(Error::InvalidArgument("num_simulations must be positive".into()));
    }
    let golds: Vec<usize> = eval.iter().map(|t| t.label).collect();
    let mut rng = seeds::rng(seed);
    let reports = (0..num_simulations)
        .map(|_| {
            let preds: Vec<usize> = golds.iter().map(|_| dist.sample(&mut rng)).collect();
            evaluate(&preds, &golds, dist.num_labels())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::mean(&reports).expect("at least one simulation"))
}

/// Sparse token-index counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BowVector {
    counts: BTreeMap<usize, u64>,
}

impl BowVector {
    /// Out-of-vocabulary tokens count under UNK.
    pub fn from_tokens(seq: &TokenSequence, vocab: &Vocabulary) -> Self {
        let mut counts = BTreeMap::new();
        for t in &seq.tokens {
            *counts.entry(vocab.index_of(t)).or_insert(0) += 1;
        }
        BowVector { counts }
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&self, other: &BowVector) -> BowVector {
        let mut counts = self.counts.clone();
        for (i, c) in other.iter() {
            *counts.entry(i).or_insert(0) += c;
        }
        BowVector { counts }
    }

    fn sq_norm(&self) -> u128 {
        self.counts.values().map(|&c| u128::from(c) * u128::from(c)).sum()
    }

    fn dot(&self, other: &BowVector) -> u128 {
        let (small, large) = if self.support() <= other.support() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().map(|(i, c)| u128::from(c) * u128::from(large.get(i))).sum()
    }

    /// Exact squared Euclidean distance.
    pub fn sq_distance(&self, other: &BowVector) -> u128 {
        self.sq_norm() + other.sq_norm() - 2 * self.dot(other)
    }
}

/// Sum of the two drugs' count vectors.
pub fn bow_pair_vector(tokens1: &TokenSequence, tokens2: &TokenSequence, vocab: &Vocabulary) -> BowVector {
    BowVector::from_tokens(tokens1, vocab).add(&BowVector::from_tokens(tokens2, vocab))
}

#[derive(Debug, Clone)]
pub struct KnnIndex {
    k: usize,
    points: Vec<(BowVector, u128)>,
    labels: Vec<usize>,
    num_labels: usize,
}

impl KnnIndex {
    pub fn fit(points: Vec<BowVector>, labels: Vec<usize>, k: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                preds: points.len(),
                golds: labels.len(),
            });
        }
        if k == 0 || k > points.len() {
            return Err(Error::InvalidArgument(format!(
                "k must be in 1..={}, got {k}",
                points.len()
            )));
        }
        let num_labels = labels.iter().max().map_or(0, |&m| m + 1);
        let points = points
            .into_iter()
            .map(|p| {
                let n = p.sq_norm();
                (p, n)
            })
            .collect();
        Ok(KnnIndex {
            k,
            points,
            labels,
            num_labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Majority vote among the `k` nearest points; distance ties go to the
    /// earlier inserted point, vote ties to the smaller label.
    pub fn predict(&self, query: &BowVector) -> usize {
        let qn = query.sq_norm();
        let mut dists: Vec<(u128, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (p, pn))| (qn + pn - 2 * query.dot(p), i))
            .collect();
        if dists.len() > self.k {
            dists.select_nth_unstable(self.k - 1);
            dists.truncate(self.k);
        }
        let mut votes = vec![0usize; self.num_labels];
        for &(_, i) in &dists {
            votes[self.labels[i]] += 1;
        }
        let best = *votes.iter().max().unwrap();
        votes.iter().position(|&v| v == best).unwrap()
    }
}
