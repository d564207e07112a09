//! Probabilistic interleaving.
//!
//! Each ranking is softened into a distribution that gives the document at
//! rank `r` (1-based) mass proportional to `1 / r^tau`. To build the shown
//! list, a fair coin picks one of the two rankings per position, a document
//! is drawn from that ranking's distribution renormalized over the documents
//! not shown yet, and it is removed from both.
//!
//! Credit inference does not use the coin flips that actually happened.
//! Since every document is removed from both distributions, the set of
//! remaining documents at each position is fixed by the shown list alone, so
//! the posterior over assignment sequences factorizes per position:
//! `P(position r came from A | shown list) = p_A(d_r) / (p_A(d_r) + p_B(d_r))`.
//! The expected credit difference over all `2^n` sequences is therefore the
//! sum of `P(A) - P(B)` over clicked positions.

use rand::Rng;

use super::{ComparisonOutcome, Side};
use crate::error::{Error, Result};
use crate::ranking::Ranking;

pub const DEFAULT_TAU: f64 = 3.0;

/// Expected credit differences at or below this magnitude count as a tie.
pub const CREDIT_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilisticInterleaving {
    pub displayed: Ranking,
    /// Which ranking the coin picked at each position. Kept for inspection;
    /// inference marginalizes over it instead.
    pub assignments: Vec<Side>,
}

/// Rank-softened weights, indexed by document id.
struct SoftRanks {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SoftRanks {
    fn new(r_a: &Ranking, r_b: &Ranking, tau: f64) -> Result<Self> {
        if r_a.is_empty() || r_b.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be non-negative, got {tau}")));
        }
        let size = r_a.iter().chain(r_b.iter()).max().unwrap() + 1;
        r_a.validate(size)?;
        r_b.validate(size)?;
        let weights = |r: &Ranking| {
            let mut w = vec![0.0; size];
            for (rank, d) in r.iter().enumerate() {
                w[d] = ((rank + 1) as f64).powf(-tau);
            }
            w
        };
        let (a, b) = (weights(r_a), weights(r_b));
        if r_a.len() != r_b.len() || a.iter().zip(&b).any(|(x, y)| (*x > 0.0) != (*y > 0.0)) {
            return Err(Error::InvalidRanking(
                "both rankings must order the same candidate set".into(),
            ));
        }
        Ok(SoftRanks { a, b })
    }

    fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Current => &self.a,
            Side::Candidate => &self.b,
        }
    }

    /// Probability of drawing `doc` from each side given the `shown` flags.
    fn draw_probabilities(&self, doc: usize, shown: &[bool]) -> (f64, f64) {
        let (mut za, mut zb) = (0.0, 0.0);
        for ((&s, &a), &b) in shown.iter().zip(&self.a).zip(&self.b) {
            if !s {
                za += a;
                zb += b;
            }
        }
        (self.a[doc] / za, self.b[doc] / zb)
    }
}

/// Interleaves `r_a` (the current ranker) and `r_b` (the candidate) into a
/// list of at most `k` documents.
pub fn probabilistic_interleave<R: Rng + ?Sized>(
    r_a: &Ranking,
    r_b: &Ranking,
    k: usize,
    tau: f64,
    rng: &mut R,
) -> Result<ProbabilisticInterleaving> {
    let soft = SoftRanks::new(r_a, r_b, tau)?;
    let n = k.min(r_a.len());
    let mut shown = vec![false; soft.a.len()];
    let mut displayed = Vec::with_capacity(n);
    let mut assignments = Vec::with_capacity(n);
    let ranking_of = |side: Side| match side {
        Side::Current => r_a,
        Side::Candidate => r_b,
    };
    for _ in 0..n {
        let side = if rng.random::<bool>() {
            Side::Current
        } else {
            Side::Candidate
        };
        let weights = soft.side(side);
        let order = ranking_of(side);
        let total: f64 = order.iter().filter(|&d| !shown[d]).map(|d| weights[d]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for d in order.iter().filter(|&d| !shown[d]) {
            pick = Some(d);
            if u < weights[d] {
                break;
            }
            u -= weights[d];
        }
        let d = pick.expect("a document remains while fewer than n are shown");
        shown[d] = true;
        displayed.push(d);
        assignments.push(side);
    }
    Ok(ProbabilisticInterleaving {
        displayed: Ranking::new_unchecked(displayed),
        assignments,
    })
}

/// Expected number of clicks credited to `r_a` minus those credited to
/// `r_b`, marginalized over every coin-flip sequence that could have
/// produced `displayed`.
pub fn expected_credit_difference(
    displayed: &Ranking,
    clicks: &[bool],
    r_a: &Ranking,
    r_b: &Ranking,
    tau: f64,
) -> Result<f64> {
    if displayed.len() != clicks.len() {
        return Err(Error::InvalidArgument(format!(
            "{} clicks for {} displayed documents",
            clicks.len(),
            displayed.len()
        )));
    }
    let soft = SoftRanks::new(r_a, r_b, tau)?;
    displayed.validate(soft.a.len())?;
    let mut shown = vec![false; soft.a.len()];
    let mut diff = 0.0;
    for (d, &clicked) in displayed.iter().zip(clicks) {
        if soft.a[d] == 0.0 {
            return Err(Error::InvalidRanking(format!(
                "displayed document {d} is not ranked by either ranker"
            )));
        }
        if clicked {
            let (pa, pb) = soft.draw_probabilities(d, &shown);
            diff += (pa - pb) / (pa + pb);
        }
        shown[d] = true;
    }
    Ok(diff)
}

/// Decides the comparison from the expected credit difference; no clicks or
/// a (numerically) zero difference is a tie.
pub fn infer_preference_probabilistic(
    displayed: &Ranking,
    clicks: &[bool],
    r_a: &Ranking,
    r_b: &Ranking,
    tau: f64,
) -> Result<ComparisonOutcome> {
    let diff = expected_credit_difference(displayed, clicks, r_a, r_b, tau)?;
    Ok(ComparisonOutcome::from_credit_difference(diff, CREDIT_TIE_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec(), 16).unwrap()
    }

    #[test]
    fn identical_rankings_sample_from_the_shared_distribution() {
        // Identical rankings give identical softened distributions, so the
        // shown list is a draw from that one distribution.
        let mut rng = seeded(1);
        let a = r(&[3, 1, 0, 2]);
        let n = 50_000;
        let mut top = 0;
        for _ in 0..n {
            let il = probabilistic_interleave(&a, &a, 3, DEFAULT_TAU, &mut rng).unwrap();
            assert_eq!(il.displayed.len(), 3);
            top += (il.displayed[0] == 3) as usize;
        }
        let expected = 1.0 / (1.0 + 1.0 / 8.0 + 1.0 / 27.0 + 1.0 / 64.0);
        assert!((top as f64 / n as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn opposite_pair_top_position_is_fair() {
        let mut rng = seeded(2);
        let (a, b) = (r(&[0, 1]), r(&[1, 0]));
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| {
                probabilistic_interleave(&a, &b, 2, DEFAULT_TAU, &mut rng)
                    .unwrap()
                    .displayed[0]
                    == 0
            })
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn softened_first_draw_probability() {
        let a = r(&[0, 1, 2]);
        let soft = SoftRanks::new(&a, &a, 3.0).unwrap();
        let (p, _) = soft.draw_probabilities(0, &[false; 3]);
        let expected = 1.0 / (1.0 + 1.0 / 8.0 + 1.0 / 27.0);
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.860_56).abs() < 1e-5);
    }

    #[test]
    fn no_clicks_or_same_rankings_tie() {
        let (a, b) = (r(&[0, 1, 2]), r(&[2, 1, 0]));
        let shown = r(&[2, 0, 1]);
        let out = infer_preference_probabilistic(&shown, &[false; 3], &a, &b, 3.0).unwrap();
        assert_eq!(out, ComparisonOutcome::Tie);
        let out = infer_preference_probabilistic(&shown, &[true, true, false], &a, &a, 3.0).unwrap();
        assert_eq!(out, ComparisonOutcome::Tie);
    }

    #[test]
    fn click_on_top_document_of_a_favours_a() {
        let (a, b) = (r(&[0, 1]), r(&[1, 0]));
        let out = infer_preference_probabilistic(&r(&[0, 1]), &[true, false], &a, &b, 3.0).unwrap();
        assert_eq!(out, ComparisonOutcome::Current);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mut rng = seeded(3);
        let (a, b) = (r(&[0, 1, 2]), r(&[0, 1, 3]));
        assert!(probabilistic_interleave(&a, &b, 2, 3.0, &mut rng).is_err());
        assert!(probabilistic_interleave(&r(&[]), &a, 2, 3.0, &mut rng).is_err());
        assert!(infer_preference_probabilistic(&r(&[0, 1]), &[true], &a, &a, 3.0).is_err());
    }
}
