use std::collections::HashMap;

use oltr_core::click::ClickModel;
use oltr_core::data::make_synthetic;
use oltr_core::eval::{evaluate_heldout, ndcg_at_k, student_t_two_sided, welch_t_test};
use oltr_core::harness::DatasetSpec;
use oltr_core::ranking::{LinearRanker, Ranking};
use oltr_core::rng::seeded;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

#[test]
fn zero_ranker_matches_random_permutation_average() {
    let synth = make_synthetic(4000, 10, 8, 3).unwrap();
    let test = &synth.dataset.test;
    let zero = evaluate_heldout(&LinearRanker::zeros(8), test, 17).unwrap();

    let mut rng = seeded(99);
    let per_query = 100;
    let mut total = 0.0;
    for q in test {
        let mut order: Vec<usize> = (0..q.len()).collect();
        let mut sum = 0.0;
        for _ in 0..per_query {
            order.shuffle(&mut rng);
            sum += ndcg_at_k(&Ranking::new(order.clone(), q.len()).unwrap(), &q.relevance, 10);
        }
        total += sum / per_query as f64;
    }
    let expected = total / test.len() as f64;
    assert!((zero - expected).abs() < 0.01, "{zero} vs {expected}");
}

#[test]
fn generator_weights_rank_the_bundled_test_split_well() {
    let DatasetSpec::Synthetic { queries, docs, dim, seed } = DatasetSpec::bundled() else {
        unreachable!()
    };
    let synth = make_synthetic(queries, docs, dim, seed).unwrap();
    let ndcg = evaluate_heldout(&synth.weights, &synth.dataset.test, 0).unwrap();
    assert!(ndcg > 0.95, "{ndcg}");
    for (q, d, f, s) in [(100, 20, 10, 1), (50, 30, 32, 2)] {
        let synth = make_synthetic(q, d, f, s).unwrap();
        let ndcg = evaluate_heldout(&synth.weights, &synth.dataset.test, 0).unwrap();
        assert!(ndcg > 0.95, "{q}x{d}x{f}: {ndcg}");
    }
}

/// Two-sided p-value by integrating the Student-t density from 0 to |t|
/// with composite Simpson's rule.
fn t_tail_by_quadrature(t: f64, df: f64) -> f64 {
    let log_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let n = 200_000;
    let h = t.abs() / n as f64;
    let mut s = density(0.0) + density(t.abs());
    for i in 1..n {
        s += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let central = s * h / 3.0;
    1.0 - 2.0 * central
}

#[test]
fn t_distribution_tail_matches_quadrature() {
    let mut rng = seeded(5);
    for _ in 0..20 {
        let t = rng.random_range(-6.0..6.0);
        let df = rng.random_range(1.5..200.0);
        let got = student_t_two_sided(t, df);
        let want = t_tail_by_quadrature(t, df);
        assert!((got - want).abs() < 1e-6, "t={t} df={df}: {got} vs {want}");
    }
}

#[test]
fn welch_detects_a_one_sigma_shift() {
    let mut rng = seeded(8);
    let trials = 1000;
    let mut hits = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..125).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..125).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        hits += (welch_t_test(&a, &b).unwrap().p < 0.01) as usize;
    }
    assert!(hits as f64 / trials as f64 >= 0.99, "{hits}/{trials}");
}

/// Exact distribution of click patterns for a cascading model by
/// enumerating every click and stop outcome.
fn cascading_pattern_distribution(click_probs: &[f64; 5], stop: f64, grades: &[u8]) -> HashMap<Vec<bool>, f64> {
    let mut out = HashMap::new();
    fn walk(
        pos: usize,
        p: f64,
        clicks: &mut Vec<bool>,
        probs: &[f64; 5],
        stop: f64,
        grades: &[u8],
        out: &mut HashMap<Vec<bool>, f64>,
    ) {
        if p == 0.0 {
            return;
        }
        if pos == grades.len() {
            *out.entry(clicks.clone()).or_insert(0.0) += p;
            return;
        }
        let c = probs[grades[pos] as usize];
        clicks[pos] = true;
        // clicked and left: the rest stays unclicked
        if stop > 0.0 {
            *out.entry(clicks.clone()).or_insert(0.0) += p * c * stop;
        }
        walk(pos + 1, p * c * (1.0 - stop), clicks, probs, stop, grades, out);
        clicks[pos] = false;
        walk(pos + 1, p * (1.0 - c), clicks, probs, stop, grades, out);
    }
    let mut clicks = vec![false; grades.len()];
    walk(0, 1.0, &mut clicks, click_probs, stop, grades, &mut out);
    out
}

fn noncascading_pattern_distribution(click_probs: &[f64; 5], grades: &[u8]) -> HashMap<Vec<bool>, f64> {
    let mut out = HashMap::new();
    for pattern in 0..1u32 << grades.len() {
        let clicks: Vec<bool> = (0..grades.len()).map(|i| pattern >> i & 1 == 1).collect();
        let p: f64 = clicks
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                let q = click_probs[grades[r] as usize] / (r + 1) as f64;
                if c {
                    q
                } else {
                    1.0 - q
                }
            })
            .product();
        out.insert(clicks, p);
    }
    out
}

#[test]
fn click_patterns_match_enumeration() {
    let mut rng = seeded(12);
    let draws = 100_000;
    for model in ClickModel::ALL {
        let spec = model.spec();
        for len in 1..=4 {
            let grades: Vec<u8> = (0..len).map(|_| rng.random_range(0..=4)).collect();
            let exact = match spec.observation {
                oltr_core::click::Observation::Cascading { stop_after_click } => {
                    cascading_pattern_distribution(&spec.click_probs, stop_after_click, &grades)
                }
                oltr_core::click::Observation::InverseRank => noncascading_pattern_distribution(&spec.click_probs, &grades),
            };
            let total: f64 = exact.values().sum();
            assert!((total - 1.0).abs() < 1e-12);

            let ranking = Ranking::new((0..len).collect(), len).unwrap();
            let mut counts: HashMap<Vec<bool>, usize> = HashMap::new();
            for _ in 0..draws {
                let i = model.simulate(&ranking, &grades, &mut rng).unwrap();
                *counts.entry(i.clicks).or_default() += 1;
            }
            for pattern in counts.keys() {
                assert!(exact.get(pattern).is_some_and(|&p| p > 0.0), "{model}: impossible pattern {pattern:?}");
            }
            for (pattern, p) in exact {
                let f = *counts.get(&pattern).unwrap_or(&0) as f64 / draws as f64;
                assert!((f - p).abs() < 0.01, "{model} {grades:?} {pattern:?}: {f} vs {p}");
            }
        }
    }
}
