//! Online learning to rank with simulated users.
//!
//! Two learners are provided: Dueling Bandit Gradient Descent ([`dbgd`]),
//! which perturbs a linear ranker and keeps perturbations that win an
//! interleaved comparison, and Pairwise Differentiable Gradient Descent
//! ([`pdgd`]), which samples rankings from a Plackett-Luce distribution and
//! follows a debiased pairwise gradient inferred from clicks.
//!
//! Users are simulated by the click models in [`click`], learning progress is
//! measured by [`eval`], and [`harness`] ties everything into seeded,
//! repeatable experiments.

pub mod click;
pub mod data;
pub mod dbgd;
pub mod error;
pub mod eval;
pub mod harness;
pub mod pdgd;
pub mod ranking;
pub mod rng;

pub use error::{Error, Result};
pub use ranking::{DocMatrix, LinearRanker, Ranking};
