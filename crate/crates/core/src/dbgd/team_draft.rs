//! Team-draft interleaving.

use rand::Rng;

use super::{ComparisonOutcome, Side};
use crate::error::{Error, Result};
use crate::ranking::Ranking;

#[derive(Clone, Debug, PartialEq)]
pub struct TeamDraft {
    pub displayed: Ranking,
    /// Team that contributed each shown document.
    pub teams: Vec<Side>,
}

/// Each round a coin decides which ranker picks first; then each ranker in
/// turn adds its highest-ranked document that is not shown yet.
pub fn team_draft_interleave<R: Rng + ?Sized>(
    r_a: &Ranking,
    r_b: &Ranking,
    k: usize,
    rng: &mut R,
) -> Result<TeamDraft> {
    if r_a.is_empty() || r_b.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let size = r_a.iter().chain(r_b.iter()).max().unwrap() + 1;
    r_a.validate(size)?;
    r_b.validate(size)?;

    let mut shown = vec![false; size];
    let mut displayed = Vec::new();
    let mut teams = Vec::new();
    let (mut next_a, mut next_b) = (0, 0);
    loop {
        let order = if rng.random::<bool>() {
            [Side::Current, Side::Candidate]
        } else {
            [Side::Candidate, Side::Current]
        };
        let mut picked_any = false;
        for side in order {
            if displayed.len() >= k {
                break;
            }
            let (ranking, next) = match side {
                Side::Current => (r_a, &mut next_a),
                Side::Candidate => (r_b, &mut next_b),
            };
            while *next < ranking.len() && shown[ranking[*next]] {
                *next += 1;
            }
            if let Some(&d) = ranking.as_slice().get(*next) {
                shown[d] = true;
                displayed.push(d);
                teams.push(side);
                picked_any = true;
            }
        }
        if displayed.len() >= k || !picked_any {
            break;
        }
    }
    Ok(TeamDraft {
        displayed: Ranking::new_unchecked(displayed),
        teams,
    })
}

impl TeamDraft {
    /// Clicks on a team's documents are its credit; more credit wins.
    pub fn infer(&self, clicks: &[bool]) -> Result<ComparisonOutcome> {
        if clicks.len() != self.teams.len() {
            return Err(Error::InvalidArgument(format!(
                "{} clicks for {} displayed documents",
                clicks.len(),
                self.teams.len()
            )));
        }
        let diff: i64 = self
            .teams
            .iter()
            .zip(clicks)
            .filter(|(_, &c)| c)
            .map(|(t, _)| match t {
                Side::Current => 1,
                Side::Candidate => -1,
            })
            .sum();
        Ok(ComparisonOutcome::from_credit_difference(diff as f64, 0.0))
    }
}
