//! Helpers and reference implementations shared by integration tests.
#![allow(dead_code)]

use lbaudit::scorebank::{orient, NormalizedMatrix, ScoreMatrix};
use lbaudit::{seed, Ranking};
use rand::Rng;

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Dense matrix of uniform scores in [0, 100), rounded to `decimals`.
pub fn random_matrix(seed: u64, models: usize, tasks: usize, decimals: i32) -> ScoreMatrix {
    let mut rng = seed::rng(seed);
    let scale = 10f64.powi(decimals);
    let rows = (0..models)
        .map(|_| {
            (0..tasks)
                .map(|_| (rng.gen::<f64>() * 100.0 * scale).round() / scale)
                .collect()
        })
        .collect();
    ScoreMatrix::dense(&names("m", models), &names("t", tasks), rows).unwrap()
}

pub fn random_oriented(seed: u64, models: usize, tasks: usize, decimals: i32) -> NormalizedMatrix {
    orient(&random_matrix(seed, models, tasks, decimals))
}

/// Average ranks, best (largest) first, by direct counting.
pub fn naive_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let above = values.iter().filter(|&&w| w > v).count() as f64;
            let tied = values.iter().filter(|&&w| w == v).count() as f64;
            above + (tied + 1.0) / 2.0
        })
        .collect()
}

pub fn ranking(ranks: &[f64]) -> Ranking {
    let entries = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| (format!("m{i}"), r))
        .collect();
    Ranking::new(entries).unwrap()
}

/// Tau-b by visiting every pair. `None` when a side ties all items.
pub fn tau_b_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if dx * dy > 0.0 {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let a = (conc + disc + tx) as f64;
    let b = (conc + disc + ty) as f64;
    if a == 0.0 || b == 0.0 {
        return None;
    }
    Some((conc - disc) as f64 / (a * b).sqrt())
}

/// Every sign assignment over `ranks`, tallied by W+ (exact rational counts).
pub fn brute_signed_rank_counts(ranks: &[f64]) -> Vec<(f64, u64)> {
    let n = ranks.len();
    let mut tally: std::collections::BTreeMap<u64, u64> = Default::default();
    for mask in 0u64..(1 << n) {
        let w2: f64 = (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| ranks[b] * 2.0)
            .sum();
        *tally.entry(w2 as u64).or_default() += 1;
    }
    tally.into_iter().map(|(w2, c)| (w2 as f64 / 2.0, c)).collect()
}

/// Brute-force one-sided p-value P(W+ >= observed).
pub fn brute_signed_rank_upper(ranks: &[f64], w_plus: f64) -> f64 {
    let counts = brute_signed_rank_counts(ranks);
    let hits: u64 = counts.iter().filter(|(w, _)| *w >= w_plus).map(|(_, c)| c).sum();
    hits as f64 / (1u64 << ranks.len()) as f64
}
