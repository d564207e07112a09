//! Pairwise Differentiable Gradient Descent.
//!
//! The ranker is treated as a Plackett-Luce distribution over rankings. A
//! ranking is sampled and shown, clicks are turned into pairwise preferences
//! between clicked and unclicked observed documents, and each preference
//! contributes a logistic pairwise gradient weighted by `rho`, the
//! probability of the ranking with the pair swapped relative to the
//! probability of either ranking.

use rand::Rng;

use crate::click::{ClickModel, Interaction};
use crate::data::Query;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_CUTOFF;
use crate::ranking::{preference_probability, LinearRanker, Ranking};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

/// Positions (0-based) in the displayed list of a clicked document and an
/// observed document that was not clicked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PreferencePair {
    pub clicked: usize,
    pub unclicked: usize,
}

/// Every document above the last click and the one directly below it are
/// taken as observed; each clicked document is preferred over every
/// observed unclicked one.
pub fn infer_pairwise_preferences(clicks: &[bool]) -> Vec<PreferencePair> {
    let Some(last) = clicks.iter().rposition(|&c| c) else {
        return Vec::new();
    };
    let observed = (last + 2).min(clicks.len());
    let mut pairs = Vec::new();
    for clicked in (0..observed).filter(|&p| clicks[p]) {
        for unclicked in (0..observed).filter(|&p| !clicks[p]) {
            pairs.push(PreferencePair { clicked, unclicked });
        }
    }
    pairs
}

/// Plackett-Luce normalizers of a displayed list, precomputed once so that
/// `rho` for any pair only touches the positions between the two documents.
///
/// For position `r` the normalizer is stored as `exp(shift[r]) * sum[r]`,
/// where `shift[r]` is the largest remaining score.
pub struct SwapWeights<'a> {
    scores: &'a [f64],
    displayed: &'a Ranking,
    shift: Vec<f64>,
    sum: Vec<f64>,
}

/// Below this fraction of the stored sum, removing a term by subtraction
/// loses too many digits and the reduced sum is recomputed directly.
const CANCELLATION_GUARD: f64 = 1e-6;

impl<'a> SwapWeights<'a> {
    pub fn new(scores: &'a [f64], displayed: &'a Ranking) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        displayed.validate(scores.len())?;
        let mut placed = vec![false; scores.len()];
        let mut shift = Vec::with_capacity(displayed.len());
        let mut sum = Vec::with_capacity(displayed.len());
        for d in displayed.iter() {
            let m = scores
                .iter()
                .zip(&placed)
                .filter(|(_, &p)| !p)
                .map(|(&s, _)| s)
                .fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = scores
                .iter()
                .zip(&placed)
                .filter(|(_, &p)| !p)
                .map(|(&s, _)| (s - m).exp())
                .sum();
            shift.push(m);
            sum.push(s);
            placed[d] = true;
        }
        Ok(SwapWeights {
            scores,
            displayed,
            shift,
            sum,
        })
    }

    /// `ln P(R*) - ln P(R)` where `R*` swaps positions `a` and `b`.
    pub fn log_swap_ratio(&self, a: usize, b: usize) -> f64 {
        let (i, j) = (a.min(b), a.max(b));
        let r = self.displayed.as_slice();
        let (s_up, s_down) = (self.scores[r[i]], self.scores[r[j]]);
        let mut total = 0.0;
        // Normalizers at positions i+1..=j lose R[i] and keep R[j] in R;
        // in R* it is the other way around.
        for pos in i + 1..=j {
            let m = self.shift[pos];
            let mut rest = self.sum[pos] - (s_down - m).exp();
            if rest < CANCELLATION_GUARD * self.sum[pos] {
                rest = self.remaining_without(pos, r[j], m);
            }
            let log_z = m + self.sum[pos].ln();
            let log_z_swapped = if rest > 0.0 {
                log_add_exp(m + rest.ln(), s_up)
            } else {
                s_up
            };
            total += log_z - log_z_swapped;
        }
        total
    }

    /// Scaled sum over documents still unplaced at `pos`, except `skip`.
    fn remaining_without(&self, pos: usize, skip: usize, m: f64) -> f64 {
        let placed = &self.displayed.as_slice()[..pos];
        self.scores
            .iter()
            .enumerate()
            .filter(|&(d, _)| d != skip && !placed.contains(&d))
            .map(|(_, &s)| (s - m).exp())
            .sum()
    }

    /// `P(R*) / (P(R) + P(R*))` for the documents at positions `a` and `b`.
    pub fn rho(&self, a: usize, b: usize) -> f64 {
        preference_probability(self.log_swap_ratio(a, b), 0.0)
    }
}

fn log_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `rho` for a single pair; see [`SwapWeights`] when weighting many pairs of
/// the same list.
pub fn pair_weight_rho(scores: &[f64], displayed: &Ranking, pair: PreferencePair) -> Result<f64> {
    if pair.clicked == pair.unclicked || pair.clicked.max(pair.unclicked) >= displayed.len() {
        return Err(Error::InvalidArgument(format!(
            "invalid preference pair {pair:?} for a list of length {}",
            displayed.len()
        )));
    }
    Ok(SwapWeights::new(scores, displayed)?.rho(pair.clicked, pair.unclicked))
}

/// `rho * P(i > j) * P(j > i) * (d_i - d_j)`: the gradient of
/// `rho * P(d_i ranked above d_j)` with respect to linear weights.
pub fn pair_gradient(ranker: &LinearRanker, d_i: &[f64], d_j: &[f64], rho: f64) -> Result<Vec<f64>> {
    let (s_i, s_j) = (ranker.score(d_i)?, ranker.score(d_j)?);
    let w = rho * preference_probability(s_i, s_j) * preference_probability(s_j, s_i);
    Ok(d_i.iter().zip(d_j).map(|(a, b)| w * (a - b)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pdgd {
    pub ranker: LinearRanker,
    pub learning_rate: f64,
    /// Length of the displayed list.
    pub cutoff: usize,
}

impl Pdgd {
    pub fn new(ranker: LinearRanker, learning_rate: f64, cutoff: usize) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {learning_rate}")));
        }
        if cutoff == 0 {
            return Err(Error::InvalidArgument("display cutoff must be positive".into()));
        }
        Ok(Pdgd {
            ranker,
            learning_rate,
            cutoff,
        })
    }

    /// Zero-initialized learner with the default hyperparameters.
    pub fn with_defaults(dim: usize) -> Self {
        Pdgd {
            ranker: LinearRanker::zeros(dim),
            learning_rate: DEFAULT_LEARNING_RATE,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// Debiased pairwise gradient estimated from one interaction with a list
    /// sampled for `query`.
    pub fn gradient(&self, query: &Query, interaction: &Interaction) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.ranker.dim()];
        let pairs = infer_pairwise_preferences(&interaction.clicks);
        if pairs.is_empty() {
            return Ok(grad);
        }
        let scores = self.ranker.scores(&query.docs)?;
        let displayed = &interaction.ranking;
        let weights = SwapWeights::new(&scores, displayed)?;
        for pair in pairs {
            let (ci, ui) = (displayed[pair.clicked], displayed[pair.unclicked]);
            let w = weights.rho(pair.clicked, pair.unclicked)
                * preference_probability(scores[ci], scores[ui])
                * preference_probability(scores[ui], scores[ci]);
            for ((g, a), b) in grad.iter_mut().zip(query.docs.doc(ci)).zip(query.docs.doc(ui)) {
                *g += w * (a - b);
            }
        }
        Ok(grad)
    }

    /// Gradient step from one interaction. Impressions without clicks leave
    /// the weights untouched.
    pub fn update(&mut self, query: &Query, interaction: &Interaction) -> Result<()> {
        if !interaction.has_clicks() {
            return Ok(());
        }
        let grad = self.gradient(query, interaction)?;
        self.ranker.add_scaled(&grad, self.learning_rate)
    }

    /// Samples a list for `query`, simulates clicks on it and updates.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        query: &Query,
        click_model: ClickModel,
        rng: &mut R,
    ) -> Result<Interaction> {
        let ranking = self.ranker.sample(&query.docs, self.cutoff, rng)?;
        let interaction = click_model.simulate(&ranking, &query.relevance, rng)?;
        self.update(query, &interaction)?;
        Ok(interaction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::{log_ranking_probability, DocMatrix};
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn pairs(clicks: &[u8]) -> Vec<(usize, usize)> {
        let c: Vec<bool> = clicks.iter().map(|&x| x == 1).collect();
        infer_pairwise_preferences(&c)
            .into_iter()
            .map(|p| (p.clicked, p.unclicked))
            .collect()
    }

    #[test]
    fn preference_inference_examples() {
        assert_eq!(pairs(&[0, 1, 0, 0]), vec![(1, 0), (1, 2)]);
        assert!(pairs(&[0, 0, 0]).is_empty());
        // clicks at 1 and 3 of 3: both preferred over position 2
        assert_eq!(pairs(&[1, 0, 1]), vec![(0, 1), (2, 1)]);
        // last click at the final position adds nothing below it
        assert_eq!(pairs(&[0, 1]), vec![(1, 0)]);
    }

    #[test]
    fn rho_examples() {
        let r = Ranking::new(vec![0, 1, 2], 3).unwrap();
        let rho = pair_weight_rho(&[0.5, 0.5, 0.1], &r, PreferencePair { clicked: 1, unclicked: 0 }).unwrap();
        assert!((rho - 0.5).abs() < 1e-15);

        // e^f = [2, 1, 1]: P(R) = 1/4, P(R*) = 1/4 * 2/3 = 1/6
        let scores = [2f64.ln(), 0.0, 0.0];
        let rho = pair_weight_rho(&scores, &r, PreferencePair { clicked: 1, unclicked: 0 }).unwrap();
        assert!((rho - 0.4).abs() < 1e-12, "{rho}");

        assert!(pair_weight_rho(&scores, &r, PreferencePair { clicked: 1, unclicked: 1 }).is_err());
        assert!(pair_weight_rho(&scores, &r, PreferencePair { clicked: 1, unclicked: 3 }).is_err());
    }

    #[test]
    fn rho_survives_extreme_scores() {
        let scores = [900.0, -900.0, 0.0, 1e-3, 850.0];
        let r = Ranking::new(vec![1, 4, 2], 5).unwrap();
        let w = SwapWeights::new(&scores, &r).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let rho = w.rho(a, b);
            assert!(rho.is_finite() && (0.0..=1.0).contains(&rho));
            let full = log_ranking_probability(&scores, &r.swapped(a, b)).unwrap()
                - log_ranking_probability(&scores, &r).unwrap();
            assert!((w.log_swap_ratio(a, b) - full).abs() < 1e-9 * full.abs().max(1.0));
        }
    }

    fn one_pair_query() -> Query {
        let docs = DocMatrix::from_rows(2, &[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]).unwrap();
        Query::new("q", docs, vec![0, 2, 1]).unwrap()
    }

    #[test]
    fn zero_clicks_leave_weights_untouched() {
        let q = one_pair_query();
        let mut p = Pdgd::new(LinearRanker::new(vec![0.3, -0.1]).unwrap(), 0.1, 10).unwrap();
        let before = p.ranker.clone();
        let i = Interaction::new(Ranking::new(vec![0, 1, 2], 3).unwrap(), vec![false; 3]).unwrap();
        p.update(&q, &i).unwrap();
        assert_eq!(p.ranker, before);
    }

    #[test]
    fn single_pair_at_equal_scores() {
        // zero weights: rho = P(i>j) = P(j>i) = 0.5
        let q = one_pair_query();
        let mut p = Pdgd::with_defaults(2);
        let i = Interaction::new(Ranking::new(vec![0, 1], 3).unwrap(), vec![false, true]).unwrap();
        p.update(&q, &i).unwrap();
        let expected = [0.1 * 0.125 * (0.0 - 1.0), 0.1 * 0.125 * (1.0 - 0.0)];
        for (w, e) in p.ranker.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_documents_cancel() {
        let docs = DocMatrix::from_rows(2, &[[0.2, 0.7], [0.2, 0.7]]).unwrap();
        let q = Query::new("q", docs, vec![1, 0]).unwrap();
        let p = Pdgd::new(LinearRanker::new(vec![1.0, 2.0]).unwrap(), 0.1, 10).unwrap();
        let i = Interaction::new(Ranking::new(vec![0, 1], 2).unwrap(), vec![true, false]).unwrap();
        assert_eq!(p.gradient(&q, &i).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn learns_on_a_tiny_query() {
        let q = one_pair_query();
        let mut p = Pdgd::with_defaults(2);
        let mut rng = seeded(1);
        for _ in 0..500 {
            p.step(&q, ClickModel::Perfect, &mut rng).unwrap();
        }
        let w = p.ranker.weights();
        assert!(w[1] > w[0], "{w:?}");
    }

    proptest! {
        #[test]
        fn rho_is_complementary_under_swap(
            scores in prop::collection::vec(-5.0f64..5.0, 2..12),
            seed in any::<u64>(),
        ) {
            let mut rng = seeded(seed);
            let k = scores.len().min(6);
            let r = crate::ranking::sample_by_scores(&scores, k, &mut rng).unwrap();
            let a = rng.random_range(0..k);
            let b = (a + 1 + rng.random_range(0..k - 1)) % k;
            let rho = SwapWeights::new(&scores, &r).unwrap().rho(a, b);
            let swapped = r.swapped(a, b);
            let rho_swapped = SwapWeights::new(&scores, &swapped).unwrap().rho(a, b);
            prop_assert!(rho > 0.0 && rho < 1.0);
            prop_assert!((rho + rho_swapped - 1.0).abs() < 1e-12);
        }
    }
}
