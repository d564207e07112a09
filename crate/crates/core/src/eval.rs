//! NDCG, held-out evaluation and Welch's t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::data::Query;
use crate::error::{Error, Result};
use crate::ranking::{LinearRanker, Ranking};
use crate::rng::derived;

pub const DEFAULT_CUTOFF: usize = 10;

fn gain(grade: u8) -> f64 {
    (1u32 << grade) as f64 - 1.0
}

fn discount(pos: usize) -> f64 {
    1.0 / ((pos + 2) as f64).log2()
}

pub fn dcg_at_k(ranking: &Ranking, relevance: &[u8], k: usize) -> f64 {
    ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, d)| gain(relevance[d]) * discount(pos))
        .sum()
}

pub fn ideal_dcg_at_k(relevance: &[u8], k: usize) -> f64 {
    let mut sorted = relevance.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &g)| gain(g) * discount(pos))
        .sum()
}

/// NDCG@k with gain `2^grade - 1` and discount `1 / log2(rank + 1)`.
/// Queries without any relevant document score 0.
pub fn ndcg_at_k(ranking: &Ranking, relevance: &[u8], k: usize) -> f64 {
    let ideal = ideal_dcg_at_k(relevance, k);
    if ideal == 0.0 {
        0.0
    } else {
        dcg_at_k(ranking, relevance, k) / ideal
    }
}

/// Mean NDCG@10 of the ranker's deterministic rankings over `test`.
/// Ties are broken with a random source derived from `seed`, so repeated
/// evaluations agree.
pub fn evaluate_heldout(ranker: &LinearRanker, test: &[Query], seed: u64) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("held-out set is empty".into()));
    }
    let mut rng = derived(seed, 0x5EED_E7A1);
    let mut total = 0.0;
    for q in test {
        let ranking = ranker.rank(&q.docs, DEFAULT_CUTOFF, &mut rng)?;
        total += ndcg_at_k(&ranking, &q.relevance, DEFAULT_CUTOFF);
    }
    Ok(total / test.len() as f64)
}

/// Held-out NDCG@10 recorded at increasing impression counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    pub checkpoints: Vec<(u64, f64)>,
}

impl MetricTrace {
    pub fn push(&mut self, impressions: u64, ndcg: f64) {
        debug_assert!(self.checkpoints.last().is_none_or(|&(i, _)| i < impressions));
        self.checkpoints.push((impressions, ndcg));
    }

    pub fn last(&self) -> Option<f64> {
        self.checkpoints.last().map(|&(_, v)| v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        0.0
    } else {
        variance(xs).sqrt()
    }
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Two-sided Welch (unequal variances) t-test of `mean(a) == mean(b)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        // both samples constant
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTest {
            t,
            df: na + nb - 2.0,
            p,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::DocMatrix;

    fn ranking(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec(), v.len()).unwrap()
    }

    #[test]
    fn ndcg_examples() {
        let grades = [3, 0, 2, 1];
        assert!((ndcg_at_k(&ranking(&[0, 2, 3, 1]), &grades, 10) - 1.0).abs() < 1e-15);
        // grades [1, 0] shown worst first
        let v = ndcg_at_k(&ranking(&[1, 0]), &[1, 0], 10);
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((v - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&ranking(&[0, 1, 2]), &[0, 0, 0], 10), 0.0);
    }

    #[test]
    fn ndcg_ignores_order_below_cutoff() {
        let grades = [4, 3, 2, 1, 1, 0];
        let a = ndcg_at_k(&ranking(&[0, 1, 2, 3, 4, 5]), &grades, 3);
        let b = ndcg_at_k(&ranking(&[0, 1, 2, 5, 4, 3]), &grades, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn heldout_single_query() {
        let docs = DocMatrix::from_rows(1, &[[1.0], [2.0], [3.0]]).unwrap();
        let q = Query::new("1", docs, vec![2, 0, 1]).unwrap();
        let ranker = LinearRanker::new(vec![1.0]).unwrap();
        let v = evaluate_heldout(&ranker, std::slice::from_ref(&q), 0).unwrap();
        assert_eq!(v, ndcg_at_k(&ranking(&[2, 1, 0]), &q.relevance, 10));
        assert!(evaluate_heldout(&ranker, &[], 0).is_err());
    }

    #[test]
    fn welch_identical_samples() {
        let a = [0.1, 0.4, 0.35, 0.2];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn welch_requires_two_samples() {
        assert!(matches!(
            welch_t_test(&[1.0], &[1.0, 2.0]),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn welch_constant_samples() {
        let r = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.t < 0.0);
        assert_eq!(welch_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap().p, 1.0);
    }

    #[test]
    fn welch_matches_reference_values() {
        // Reference p-values from scipy.stats.ttest_ind(a, b, equal_var=False).
        let a = [0.42, 0.44, 0.41, 0.45, 0.43, 0.40];
        let b = [0.40, 0.39, 0.42, 0.38, 0.41];
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t - 2.4019223071).abs() < 1e-8, "{}", r.t);
        assert!((r.df - 8.9893617021).abs() < 1e-8, "{}", r.df);
        assert!((r.p - 0.0398030820).abs() < 1e-8, "{}", r.p);
    }
}
