//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string,
//! so the page needs no generated TypeScript types.

use oltr_core::click::{ClickModel, Observation};
use oltr_core::harness::{run_experiment_on, Algorithm, CheckpointSpec, ComparatorKind, DatasetSpec, ExperimentConfig};
use oltr_core::ranking::{log_ranking_probability, sample_by_scores, Ranking};
use oltr_core::rng::seeded;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_PL_DOCS: usize = 5;
const MAX_IMPRESSIONS: u64 = 50_000;

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("{what}: cannot read {s:?}")))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ClickRates {
    pub model: String,
    pub impressions: u32,
    pub grades: Vec<u8>,
    /// Fraction of impressions with a click at each rank.
    pub empirical: Vec<f64>,
    pub analytic: Vec<f64>,
}

/// Simulates `impressions` users on a list with the given grades, top first.
pub fn click_rates(model: &str, grades: &str, impressions: u32, seed: u64) -> Result<ClickRates, String> {
    let model: ClickModel = model.parse().map_err(|e: oltr_core::Error| e.to_string())?;
    let grades: Vec<u8> = parse_list(grades, "grades")?;
    if grades.is_empty() || grades.len() > 20 {
        return Err("give between 1 and 20 grades".into());
    }
    let spec = model.spec();
    let n = grades.len();
    let ranking = Ranking::new((0..n).collect(), n).map_err(|e| e.to_string())?;
    let mut rng = seeded(seed);
    let mut counts = vec![0u32; n];
    for _ in 0..impressions {
        let i = model.simulate(&ranking, &grades, &mut rng).map_err(|e| e.to_string())?;
        for (c, &hit) in counts.iter_mut().zip(&i.clicks) {
            *c += hit as u32;
        }
    }
    let click = |g: u8| spec.click_probs[g as usize];
    let analytic = match spec.observation {
        Observation::InverseRank => grades.iter().enumerate().map(|(r, &g)| click(g) / (r + 1) as f64).collect(),
        Observation::Cascading { stop_after_click } => {
            let mut reach = 1.0;
            grades
                .iter()
                .map(|&g| {
                    let p = reach * click(g);
                    reach *= 1.0 - click(g) * stop_after_click;
                    p
                })
                .collect()
        }
    };
    Ok(ClickRates {
        model: model.to_string(),
        impressions,
        grades,
        empirical: counts.iter().map(|&c| c as f64 / impressions.max(1) as f64).collect(),
        analytic,
    })
}

#[derive(Debug, Serialize)]
pub struct RankingFrequency {
    pub ranking: Vec<usize>,
    pub probability: f64,
    pub frequency: f64,
}

/// Exact Plackett-Luce probabilities of every full ranking next to sampled
/// frequencies, most likely first.
pub fn plackett_luce(scores: &str, draws: u32, seed: u64) -> Result<Vec<RankingFrequency>, String> {
    let scores: Vec<f64> = parse_list(scores, "scores")?;
    if scores.is_empty() || scores.len() > MAX_PL_DOCS {
        return Err(format!("give between 1 and {MAX_PL_DOCS} scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err("scores must be finite".into());
    }
    let n = scores.len();
    let mut rng = seeded(seed);
    let mut counts = std::collections::HashMap::new();
    for _ in 0..draws {
        let r = sample_by_scores(&scores, n, &mut rng).map_err(|e| e.to_string())?;
        *counts.entry(r.into_inner()).or_insert(0u32) += 1;
    }
    let mut out = permutations(n)
        .into_iter()
        .map(|p| {
            let frequency = *counts.get(&p).unwrap_or(&0) as f64 / draws.max(1) as f64;
            let ranking = Ranking::new(p, n).map_err(|e| e.to_string())?;
            let probability = log_ranking_probability(&scores, &ranking).map_err(|e| e.to_string())?.exp();
            Ok(RankingFrequency {
                ranking: ranking.into_inner(),
                probability,
                frequency,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    out.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for d in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=p.len()).map(move |i| {
                    let mut q = p.clone();
                    q.insert(i, d);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub impressions: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// PDGD, DBGD and oracle DBGD on the bundled synthetic data.
pub fn learning_curves(click_model: &str, impressions: u64, repeats: usize, seed: u64) -> Result<Vec<Curve>, String> {
    let click_model: ClickModel = click_model.parse().map_err(|e: oltr_core::Error| e.to_string())?;
    if impressions == 0 || impressions > MAX_IMPRESSIONS {
        return Err(format!("impressions must be between 1 and {MAX_IMPRESSIONS}"));
    }
    if repeats == 0 || repeats > 10 {
        return Err("repeats must be between 1 and 10".into());
    }
    let dataset = DatasetSpec::bundled();
    let data = dataset.load().map_err(|e| e.to_string())?;
    let mut runs = vec![
        (Algorithm::Pdgd, click_model, None),
        (Algorithm::Dbgd, click_model, Some(ComparatorKind::Probabilistic)),
    ];
    runs.push((Algorithm::Dbgd, ClickModel::Perfect, Some(ComparatorKind::Oracle)));
    runs.into_iter()
        .map(|(algorithm, model, comparator)| {
            let mut config = ExperimentConfig::new(algorithm, model, dataset.clone());
            config.comparator = comparator;
            config.impressions = impressions;
            config.repeats = repeats;
            config.base_seed = seed;
            config.checkpoints = CheckpointSpec::LogSpaced(20);
            let s = run_experiment_on(&config, &data, 1).map_err(|e| e.to_string())?.summary;
            Ok(Curve {
                label: s.label,
                impressions: s.checkpoints,
                mean: s.mean_curve,
                std: s.std_curve,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = clickRates)]
pub fn click_rates_js(model: &str, grades: &str, impressions: u32, seed: u32) -> Result<String, JsValue> {
    to_js(click_rates(model, grades, impressions, seed as u64))
}

#[wasm_bindgen(js_name = plackettLuce)]
pub fn plackett_luce_js(scores: &str, draws: u32, seed: u32) -> Result<String, JsValue> {
    to_js(plackett_luce(scores, draws, seed as u64))
}

#[wasm_bindgen(js_name = learningCurves)]
pub fn learning_curves_js(click_model: &str, impressions: u32, repeats: u32, seed: u32) -> Result<String, JsValue> {
    to_js(learning_curves(click_model, impressions as u64, repeats as usize, seed as u64))
}
