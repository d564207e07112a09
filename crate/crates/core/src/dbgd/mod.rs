//! Dueling Bandit Gradient Descent.
//!
//! Every impression perturbs the current weights by a random vector of
//! length `sphere_radius`, lets the current and the perturbed ranker compete
//! on the sampled query, and moves the weights a `learning_rate` fraction of
//! the way towards the candidate only when the candidate wins.

pub mod probabilistic;
pub mod team_draft;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::click::ClickModel;
use crate::data::Query;
use crate::error::{Error, Result};
use crate::eval::{ndcg_at_k, DEFAULT_CUTOFF};
use crate::ranking::{sample_unit_sphere, LinearRanker, Ranking};

pub use probabilistic::{infer_preference_probabilistic, probabilistic_interleave};
pub use team_draft::team_draft_interleave;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_SPHERE_RADIUS: f64 = 1.0;

/// One of the two rankers being compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Current,
    Candidate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonOutcome {
    Current,
    Candidate,
    Tie,
}

impl ComparisonOutcome {
    /// Positive differences favour the current ranker.
    pub fn from_credit_difference(diff: f64, tolerance: f64) -> Self {
        if diff > tolerance {
            ComparisonOutcome::Current
        } else if diff < -tolerance {
            ComparisonOutcome::Candidate
        } else {
            ComparisonOutcome::Tie
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparator {
    Probabilistic { tau: f64 },
    TeamDraft,
    /// Picks whichever ranking has the higher NDCG@10 on the true labels.
    Oracle,
}

impl Comparator {
    pub fn name(&self) -> &'static str {
        match self {
            Comparator::Probabilistic { .. } => "probabilistic",
            Comparator::TeamDraft => "team_draft",
            Comparator::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probabilistic" => Ok(Comparator::Probabilistic {
                tau: probabilistic::DEFAULT_TAU,
            }),
            "team_draft" => Ok(Comparator::TeamDraft),
            "oracle" => Ok(Comparator::Oracle),
            _ => Err(Error::Config(format!("unknown comparator {s:?}"))),
        }
    }
}

/// NDCG@10 of both rankings on the true grades; the strictly higher one wins.
pub fn oracle_compare(r_a: &Ranking, r_b: &Ranking, relevance: &[u8]) -> Result<ComparisonOutcome> {
    r_a.validate(relevance.len())?;
    r_b.validate(relevance.len())?;
    let a = ndcg_at_k(r_a, relevance, DEFAULT_CUTOFF);
    let b = ndcg_at_k(r_b, relevance, DEFAULT_CUTOFF);
    Ok(if a > b {
        ComparisonOutcome::Current
    } else if b > a {
        ComparisonOutcome::Candidate
    } else {
        ComparisonOutcome::Tie
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dbgd {
    pub ranker: LinearRanker,
    pub learning_rate: f64,
    pub sphere_radius: f64,
    pub comparator: Comparator,
    /// Length of the displayed list.
    pub cutoff: usize,
}

/// What happened during one impression.
#[derive(Clone, Debug, PartialEq)]
pub struct DbgdStep {
    pub outcome: ComparisonOutcome,
    /// Interleaved list and clicks; `None` for the oracle comparator, which
    /// never shows anything.
    pub displayed: Option<(Ranking, Vec<bool>)>,
    pub updated: bool,
}

impl Dbgd {
    pub fn new(
        ranker: LinearRanker,
        learning_rate: f64,
        sphere_radius: f64,
        comparator: Comparator,
        cutoff: usize,
    ) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {learning_rate}")));
        }
        if !(sphere_radius > 0.0 && sphere_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {sphere_radius}")));
        }
        if cutoff == 0 {
            return Err(Error::InvalidArgument("display cutoff must be positive".into()));
        }
        Ok(Dbgd {
            ranker,
            learning_rate,
            sphere_radius,
            comparator,
            cutoff,
        })
    }

    /// Zero-initialized learner with the default hyperparameters.
    pub fn with_defaults(dim: usize, comparator: Comparator) -> Self {
        Dbgd {
            ranker: LinearRanker::zeros(dim),
            learning_rate: DEFAULT_LEARNING_RATE,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            comparator,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// Moves towards `current + sphere_radius * unit` if the candidate won.
    pub fn apply_outcome(&mut self, unit: &[f64], outcome: ComparisonOutcome) -> Result<bool> {
        if outcome != ComparisonOutcome::Candidate {
            return Ok(false);
        }
        self.ranker
            .add_scaled(unit, self.learning_rate * self.sphere_radius)?;
        Ok(true)
    }

    /// One impression: sample a candidate, compare it against the current
    /// ranker on `query` and update on a candidate win.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        query: &Query,
        click_model: ClickModel,
        rng: &mut R,
    ) -> Result<DbgdStep> {
        if query.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let unit = sample_unit_sphere(self.ranker.dim(), rng)?;
        let candidate = self.ranker.offset(&unit, self.sphere_radius)?;
        let n = query.len();
        let current_ranking = self.ranker.rank(&query.docs, n, rng)?;
        let candidate_ranking = candidate.rank(&query.docs, n, rng)?;

        let (outcome, displayed) = match self.comparator {
            Comparator::Oracle => (
                oracle_compare(&current_ranking, &candidate_ranking, &query.relevance)?,
                None,
            ),
            Comparator::Probabilistic { tau } => {
                let il = probabilistic_interleave(&current_ranking, &candidate_ranking, self.cutoff, tau, rng)?;
                let interaction = click_model.simulate(&il.displayed, &query.relevance, rng)?;
                let outcome = infer_preference_probabilistic(
                    &il.displayed,
                    &interaction.clicks,
                    &current_ranking,
                    &candidate_ranking,
                    tau,
                )?;
                (outcome, Some((interaction.ranking, interaction.clicks)))
            }
            Comparator::TeamDraft => {
                let td = team_draft_interleave(&current_ranking, &candidate_ranking, self.cutoff, rng)?;
                let interaction = click_model.simulate(&td.displayed, &query.relevance, rng)?;
                let outcome = td.infer(&interaction.clicks)?;
                (outcome, Some((interaction.ranking, interaction.clicks)))
            }
        };
        let updated = self.apply_outcome(&unit, outcome)?;
        Ok(DbgdStep {
            outcome,
            displayed,
            updated,
        })
    }
}
