//! Linear scoring, deterministic ranking and Plackett-Luce sampling.
//!
//! Functions taking `scores` operate on the per-document scores of one
//! candidate set; the [`LinearRanker`] methods compute those scores from a
//! [`DocMatrix`] first. All probability computations are done in log space
//! with the maximum score subtracted before exponentiation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major feature matrix for the candidate documents of one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl DocMatrix {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite feature value {v}")));
        }
        Ok(DocMatrix { dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn doc(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn doc_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }
}

/// Weight vector of a linear scoring function `f(d) = w · d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRanker {
    weights: Vec<f64>,
}

impl LinearRanker {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("ranker needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite weight {w}")));
        }
        Ok(LinearRanker { weights })
    }

    pub fn zeros(dim: usize) -> Self {
        LinearRanker {
            weights: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `self + scale * direction`.
    pub fn offset(&self, direction: &[f64], scale: f64) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(direction, scale)?;
        Ok(out)
    }

    pub fn add_scaled(&mut self, direction: &[f64], scale: f64) -> Result<()> {
        check_dim(self.dim(), direction.len())?;
        for (w, d) in self.weights.iter_mut().zip(direction) {
            *w += scale * d;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        LinearRanker {
            weights: self.weights.iter().map(|w| w * alpha).collect(),
        }
    }

    pub fn score(&self, doc: &[f64]) -> Result<f64> {
        check_dim(self.dim(), doc.len())?;
        Ok(dot(&self.weights, doc))
    }

    pub fn scores(&self, docs: &DocMatrix) -> Result<Vec<f64>> {
        check_dim(self.dim(), docs.dim())?;
        Ok(docs.rows().map(|d| dot(&self.weights, d)).collect())
    }

    pub fn rank<R: Rng + ?Sized>(&self, docs: &DocMatrix, k: usize, rng: &mut R) -> Result<Ranking> {
        rank_by_scores(&self.scores(docs)?, k, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, docs: &DocMatrix, k: usize, rng: &mut R) -> Result<Ranking> {
        sample_by_scores(&self.scores(docs)?, k, rng)
    }

    pub fn log_ranking_probability(&self, ranking: &Ranking, docs: &DocMatrix) -> Result<f64> {
        log_ranking_probability(&self.scores(docs)?, ranking)
    }

    /// Probability that this ranker places `d_i` before `d_j`.
    pub fn pair_preference_probability(&self, d_i: &[f64], d_j: &[f64]) -> Result<f64> {
        Ok(preference_probability(self.score(d_i)?, self.score(d_j)?))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordered list of distinct candidate indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Validates that `indices` are distinct and below `num_candidates`.
    pub fn new(indices: Vec<usize>, num_candidates: usize) -> Result<Self> {
        let mut seen = vec![false; num_candidates];
        for &i in &indices {
            if i >= num_candidates {
                return Err(Error::InvalidRanking(format!(
                    "index {i} out of range for {num_candidates} candidates"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidRanking(format!("duplicate index {i}")));
            }
        }
        Ok(Ranking(indices))
    }

    pub(crate) fn new_unchecked(indices: Vec<usize>) -> Self {
        Ranking(indices)
    }

    /// Checks this ranking against a candidate set of the given size.
    pub fn validate(&self, num_candidates: usize) -> Result<()> {
        Ranking::new(self.0.clone(), num_candidates).map(|_| ())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn truncated(&self, k: usize) -> Ranking {
        Ranking(self.0[..k.min(self.0.len())].to_vec())
    }

    /// Same ranking with the documents at positions `a` and `b` exchanged.
    pub fn swapped(&self, a: usize, b: usize) -> Ranking {
        let mut v = self.0.clone();
        v.swap(a, b);
        Ranking(v)
    }
}

impl std::ops::Index<usize> for Ranking {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Top-`k` documents by descending score. Ties are broken uniformly at
/// random: candidates are shuffled before a stable sort.
pub fn rank_by_scores<R: Rng + ?Sized>(scores: &[f64], k: usize, rng: &mut R) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k.min(scores.len()));
    Ok(Ranking(order))
}

/// Draws a length-`min(k, n)` ranking from the Plackett-Luce distribution
/// over `scores`: documents are picked sequentially without replacement,
/// each with probability proportional to `exp(score)` among those left.
pub fn sample_by_scores<R: Rng + ?Sized>(scores: &[f64], k: usize, rng: &mut R) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let n = scores.len();
    let k = k.min(n);
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(k);
    let mut weights = vec![0.0; n];
    for _ in 0..k {
        let max = remaining
            .iter()
            .map(|&d| scores[d])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (w, &d) in weights.iter_mut().zip(&remaining) {
            *w = (scores[d] - max).exp();
            total += *w;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (pos, &w) in weights[..remaining.len()].iter().enumerate() {
            if u < w {
                pick = pos;
                break;
            }
            u -= w;
        }
        out.push(remaining.remove(pick));
    }
    Ok(Ranking(out))
}

/// `ln Σ exp(x)` over the given values.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-probability of `ranking` under the Plackett-Luce model defined by
/// `scores`. Denominators range over every candidate not yet placed, so a
/// top-k prefix is conditioned on the full candidate set.
pub fn log_ranking_probability(scores: &[f64], ranking: &Ranking) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    ranking.validate(scores.len())?;
    let mut placed = vec![false; scores.len()];
    let mut total = 0.0;
    for d in ranking.iter() {
        let log_z = log_sum_exp(
            scores
                .iter()
                .zip(&placed)
                .filter(|(_, &p)| !p)
                .map(|(&s, _)| s),
        );
        total += scores[d] - log_z;
        placed[d] = true;
    }
    Ok(total)
}

/// Logistic preference `e^{s_i} / (e^{s_i} + e^{s_j})`, evaluated without
/// overflow.
pub fn preference_probability(s_i: f64, s_j: f64) -> f64 {
    let x = s_i - s_j;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform direction on the unit sphere in `dim` dimensions.
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("sphere dimension must be positive".into()));
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            return Ok(v.into_iter().map(|x| x / norm).collect());
        }
    }
}
