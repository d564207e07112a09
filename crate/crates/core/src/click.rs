//! Simulated users.
//!
//! Three behaviours are available. The *perfect* user scans the whole
//! displayed list and clicks strictly according to relevance. The
//! *almost random* users click with probabilities between 0.40 and 0.60;
//! the cascading variant scans top-down and stops after a click with
//! probability 0.5, while the non-cascading variant observes rank `r`
//! independently with probability `1/r`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::MAX_GRADE;
use crate::error::{Error, Result};
use crate::ranking::Ranking;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickModel {
    Perfect,
    AlmostRandomCascading,
    AlmostRandomNoncascading,
}

/// How a user decides which positions of the displayed list to look at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observation {
    /// Top-down scan that ends after a click with the given probability.
    Cascading { stop_after_click: f64 },
    /// Rank `r` (1-based) is observed independently with probability `1/r`.
    InverseRank,
}

/// Click probabilities per relevance grade plus the observation rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickModelSpec {
    pub model: ClickModel,
    pub click_probs: [f64; 5],
    pub observation: Observation,
}

const PERFECT_CLICKS: [f64; 5] = [0.00, 0.20, 0.40, 0.80, 1.00];
const ALMOST_RANDOM_CLICKS: [f64; 5] = [0.40, 0.45, 0.50, 0.55, 0.60];

impl ClickModel {
    pub const ALL: [ClickModel; 3] = [
        ClickModel::Perfect,
        ClickModel::AlmostRandomCascading,
        ClickModel::AlmostRandomNoncascading,
    ];

    pub fn spec(self) -> ClickModelSpec {
        match self {
            ClickModel::Perfect => ClickModelSpec {
                model: self,
                click_probs: PERFECT_CLICKS,
                observation: Observation::Cascading {
                    stop_after_click: 0.0,
                },
            },
            ClickModel::AlmostRandomCascading => ClickModelSpec {
                model: self,
                click_probs: ALMOST_RANDOM_CLICKS,
                observation: Observation::Cascading {
                    stop_after_click: 0.5,
                },
            },
            ClickModel::AlmostRandomNoncascading => ClickModelSpec {
                model: self,
                click_probs: ALMOST_RANDOM_CLICKS,
                observation: Observation::InverseRank,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClickModel::Perfect => "perfect",
            ClickModel::AlmostRandomCascading => "almost_random_cascading",
            ClickModel::AlmostRandomNoncascading => "almost_random_noncascading",
        }
    }

    /// Simulates one impression of `ranking`; `relevance` holds the grade of
    /// every candidate the ranking indexes into.
    pub fn simulate<R: Rng + ?Sized>(
        self,
        ranking: &Ranking,
        relevance: &[u8],
        rng: &mut R,
    ) -> Result<Interaction> {
        let spec = self.spec();
        match spec.observation {
            Observation::Cascading { .. } => simulate_cascading(&spec, ranking, relevance, rng),
            Observation::InverseRank => simulate_noncascading(&spec, ranking, relevance, rng),
        }
    }
}

impl fmt::Display for ClickModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClickModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClickModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown click model {s:?}")))
    }
}

impl ClickModelSpec {
    pub fn click_probability(&self, grade: u8) -> Result<f64> {
        self.click_probs
            .get(grade as usize)
            .copied()
            .ok_or(Error::GradeOutOfRange(grade as i64))
    }
}

/// A displayed ranking and the clicks it received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub ranking: Ranking,
    pub clicks: Vec<bool>,
}

impl Interaction {
    pub fn new(ranking: Ranking, clicks: Vec<bool>) -> Result<Self> {
        if ranking.len() != clicks.len() {
            return Err(Error::InvalidArgument(format!(
                "{} clicks for a ranking of length {}",
                clicks.len(),
                ranking.len()
            )));
        }
        Ok(Interaction { ranking, clicks })
    }

    pub fn has_clicks(&self) -> bool {
        self.clicks.iter().any(|&c| c)
    }

    pub fn click_count(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }
}

fn displayed_grades(ranking: &Ranking, relevance: &[u8]) -> Result<Vec<u8>> {
    ranking
        .iter()
        .map(|d| {
            let g = *relevance.get(d).ok_or_else(|| {
                Error::InvalidRanking(format!(
                    "document {d} has no grade ({} grades given)",
                    relevance.len()
                ))
            })?;
            if g > MAX_GRADE {
                return Err(Error::GradeOutOfRange(g as i64));
            }
            Ok(g)
        })
        .collect()
}

/// Top-down scan: each reached position is clicked with its grade's click
/// probability; after a click the user leaves with the stop probability.
pub fn simulate_cascading<R: Rng + ?Sized>(
    spec: &ClickModelSpec,
    ranking: &Ranking,
    relevance: &[u8],
    rng: &mut R,
) -> Result<Interaction> {
    let Observation::Cascading { stop_after_click } = spec.observation else {
        return Err(Error::InvalidArgument(format!(
            "{} is not a cascading click model",
            spec.model
        )));
    };
    let grades = displayed_grades(ranking, relevance)?;
    let mut clicks = vec![false; grades.len()];
    for (pos, &g) in grades.iter().enumerate() {
        if rng.random::<f64>() < spec.click_probs[g as usize] {
            clicks[pos] = true;
            if stop_after_click > 0.0 && rng.random::<f64>() < stop_after_click {
                break;
            }
        }
    }
    Interaction::new(ranking.clone(), clicks)
}

/// Each rank `r` is observed with probability `1/r`, independently of the
/// others; observed positions are clicked by grade.
pub fn simulate_noncascading<R: Rng + ?Sized>(
    spec: &ClickModelSpec,
    ranking: &Ranking,
    relevance: &[u8],
    rng: &mut R,
) -> Result<Interaction> {
    if spec.observation != Observation::InverseRank {
        return Err(Error::InvalidArgument(format!(
            "{} is not a non-cascading click model",
            spec.model
        )));
    }
    let grades = displayed_grades(ranking, relevance)?;
    let clicks = grades
        .iter()
        .enumerate()
        .map(|(pos, &g)| {
            let observed = rng.random::<f64>() < 1.0 / (pos + 1) as f64;
            observed && rng.random::<f64>() < spec.click_probs[g as usize]
        })
        .collect();
    Interaction::new(ranking.clone(), clicks)
}
