use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::click::ClickModel;
use crate::data::{sample_query, Dataset, Query};
use crate::dbgd::Dbgd;
use crate::error::{Error, Result};
use crate::eval::{evaluate_heldout, mean, std_dev, welch_t_test, MetricTrace};
use crate::pdgd::Pdgd;
use crate::ranking::LinearRanker;
use crate::rng::{derive_seed, seeded, SimRng};

/// p-value below which a difference is reported as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;
pub const TEST_VARIANT: &str = "welch_two_sided";

enum Learner {
    Dbgd(Dbgd),
    Pdgd(Pdgd),
}

impl Learner {
    fn new(config: &ExperimentConfig, dim: usize) -> Result<Self> {
        let ranker = LinearRanker::zeros(dim);
        Ok(match config.algorithm {
            Algorithm::Pdgd => Learner::Pdgd(Pdgd::new(ranker, config.learning_rate(), config.cutoff)?),
            Algorithm::Dbgd => Learner::Dbgd(Dbgd::new(
                ranker,
                config.learning_rate(),
                config.sphere_radius,
                config.comparator().expect("dbgd has a comparator"),
                config.cutoff,
            )?),
        })
    }

    fn step(&mut self, query: &Query, click_model: ClickModel, rng: &mut SimRng) -> Result<()> {
        match self {
            Learner::Dbgd(d) => d.step(query, click_model, rng).map(drop),
            Learner::Pdgd(p) => p.step(query, click_model, rng).map(drop),
        }
    }

    fn ranker(&self) -> &LinearRanker {
        match self {
            Learner::Dbgd(d) => &d.ranker,
            Learner::Pdgd(p) => &p.ranker,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: usize,
    pub seed: u64,
    pub config_hash: String,
    pub trace: MetricTrace,
    pub final_ndcg: f64,
    pub final_weights: Vec<f64>,
}

/// One seeded run: sample a query, show a list, simulate clicks, update,
/// and record held-out NDCG@10 at every scheduled checkpoint.
pub fn run_single(config: &ExperimentConfig, dataset: &Dataset, run_index: usize) -> Result<RunResult> {
    config.validate()?;
    let seed = derive_seed(config.base_seed, run_index as u64);
    let mut rng = seeded(seed);
    let mut learner = Learner::new(config, dataset.feature_dim)?;
    let schedule = config.schedule();
    let mut trace = MetricTrace::default();
    let mut next = 0;

    let record = |impressions: u64, ranker: &LinearRanker, trace: &mut MetricTrace| -> Result<()> {
        let ndcg = evaluate_heldout(ranker, &dataset.test, derive_seed(seed, impressions))?;
        trace.push(impressions, ndcg);
        Ok(())
    };

    if schedule.first() == Some(&0) {
        record(0, learner.ranker(), &mut trace)?;
        next = 1;
    }
    for t in 1..=config.impressions {
        let query = sample_query(dataset, &mut rng)?;
        learner.step(query, config.click_model, &mut rng)?;
        if schedule.get(next) == Some(&t) {
            record(t, learner.ranker(), &mut trace)?;
            next += 1;
        }
    }
    let final_ndcg = trace.last().expect("schedule ends at the horizon");
    Ok(RunResult {
        run_id: run_index,
        seed,
        config_hash: config.hash(),
        trace,
        final_ndcg,
        final_weights: learner.ranker().weights().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub baseline_mean: f64,
    pub mean_difference: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

impl Comparison {
    pub fn between(label: &str, finals: &[f64], baseline: &[f64]) -> Result<Self> {
        let test = welch_t_test(finals, baseline)?;
        Ok(Comparison {
            baseline: label.to_string(),
            baseline_mean: mean(baseline),
            mean_difference: mean(finals) - mean(baseline),
            t: test.t,
            df: test.df,
            p: test.p,
            significant: test.p < SIGNIFICANCE_LEVEL,
        })
    }
}

/// Aggregate of all runs of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub mean: f64,
    pub std: f64,
    pub finals: Vec<f64>,
    pub checkpoints: Vec<u64>,
    pub checkpoint_schedule: String,
    pub mean_curve: Vec<f64>,
    pub std_curve: Vec<f64>,
    pub test_variant: String,
    pub significance_level: f64,
    pub comparisons: Vec<Comparison>,
}

impl Summary {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn compare_to(&self, other: &Summary) -> Result<Comparison> {
        Comparison::between(&other.label, &self.finals, &other.finals)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub runs: Vec<RunResult>,
    pub summary: Summary,
}

/// Runs every repeat, over `workers` threads when the `parallel` feature is
/// on. Results are ordered by run id and do not depend on `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Experiment> {
    config.validate()?;
    let dataset = config.dataset.load()?;
    run_experiment_on(config, &dataset, workers)
}

pub fn run_experiment_on(config: &ExperimentConfig, dataset: &Dataset, workers: usize) -> Result<Experiment> {
    config.validate()?;
    let mut runs = execute(config, dataset, workers.max(1))?;
    runs.sort_by_key(|r| r.run_id);
    let mut summary = summarize(config, &runs);
    if let Some(path) = &config.baseline {
        let baseline = Summary::load(path)?;
        summary.comparisons.push(summary.compare_to(&baseline)?);
    }
    Ok(Experiment { runs, summary })
}

#[cfg(feature = "parallel")]
fn execute(config: &ExperimentConfig, dataset: &Dataset, workers: usize) -> Result<Vec<RunResult>> {
    use rayon::prelude::*;
    if workers == 1 {
        return (0..config.repeats).map(|i| run_single(config, dataset, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..config.repeats)
            .into_par_iter()
            .map(|i| run_single(config, dataset, i))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn execute(config: &ExperimentConfig, dataset: &Dataset, _workers: usize) -> Result<Vec<RunResult>> {
    (0..config.repeats).map(|i| run_single(config, dataset, i)).collect()
}

/// Per-checkpoint mean and sample standard deviation across runs.
pub fn curve_statistics(runs: &[RunResult]) -> (Vec<u64>, Vec<f64>, Vec<f64>) {
    let Some(first) = runs.first() else {
        return Default::default();
    };
    let checkpoints: Vec<u64> = first.trace.checkpoints.iter().map(|&(c, _)| c).collect();
    let (mut means, mut stds) = (Vec::new(), Vec::new());
    for i in 0..checkpoints.len() {
        let values: Vec<f64> = runs.iter().map(|r| r.trace.checkpoints[i].1).collect();
        means.push(mean(&values));
        stds.push(std_dev(&values));
    }
    (checkpoints, means, stds)
}

fn summarize(config: &ExperimentConfig, runs: &[RunResult]) -> Summary {
    let finals: Vec<f64> = runs.iter().map(|r| r.final_ndcg).collect();
    let (checkpoints, mean_curve, std_curve) = curve_statistics(runs);
    let checkpoint_schedule = match &config.checkpoints {
        super::config::CheckpointSpec::LogSpaced(n) => format!("0 plus {n} log-spaced points up to the horizon"),
        super::config::CheckpointSpec::Explicit(_) => "explicit".into(),
    };
    Summary {
        label: config.label(),
        config: config.clone(),
        config_hash: config.hash(),
        mean: mean(&finals),
        std: std_dev(&finals),
        finals,
        checkpoints,
        checkpoint_schedule,
        mean_curve,
        std_curve,
        test_variant: TEST_VARIANT.into(),
        significance_level: SIGNIFICANCE_LEVEL,
        comparisons: Vec::new(),
    }
}
