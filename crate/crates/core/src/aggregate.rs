//! Score and rank aggregation over a subset of tasks.
//!
//! Subsets are given as column indices into the matrix. Every method fails on
//! an empty subset or on a missing cell inside the subset.
//!
//! Weights (explicit map first, then each task's [`MetricSpec`] weight) only
//! affect the mean-based methods; rank-based methods ignore them.
//!
//! [`MetricSpec`]: crate::scorebank::MetricSpec

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rankstats::{fractional_ranks, rank_models, Ranking};
use crate::scorebank::NormalizedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "mean")]
    ArithmeticMean,
    GeometricMean,
    Median,
    MacroAverage,
    AverageRank,
    RobustAverageRank,
    #[serde(alias = "elimination")]
    EliminationRanking,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::ArithmeticMean,
        Method::GeometricMean,
        Method::Median,
        Method::MacroAverage,
        Method::AverageRank,
        Method::RobustAverageRank,
        Method::EliminationRanking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ArithmeticMean => "arithmetic_mean",
            Method::GeometricMean => "geometric_mean",
            Method::Median => "median",
            Method::MacroAverage => "macro_average",
            Method::AverageRank => "average_rank",
            Method::RobustAverageRank => "robust_average_rank",
            Method::EliminationRanking => "elimination_ranking",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::InvalidArgument(format!("unknown aggregation method {s:?}")))
    }
}

fn default_bin_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub method: Method,
    /// Bucket width for [`Method::RobustAverageRank`].
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, f64>>,
    /// Task → group for [`Method::MacroAverage`]; falls back to the matrix's
    /// per-task group labels when absent.
    #[serde(default, rename = "groups", skip_serializing_if = "Option::is_none")]
    pub group_map: Option<BTreeMap<String, String>>,
}

impl AggregationSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            bin_width: 1.0,
            weights: None,
            group_map: None,
        }
    }

    pub fn with_bin_width(mut self, bin_width: f64) -> Self {
        self.bin_width = bin_width;
        self
    }

    pub fn with_weights(mut self, weights: BTreeMap<String, f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_groups(mut self, groups: BTreeMap<String, String>) -> Self {
        self.group_map = Some(groups);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::Config(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if let Some(w) = &self.weights {
            for (task, &v) in w {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!(
                        "weight for task {task:?} must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-model aggregate values, in matrix row order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub per_model: Vec<(String, f64)>,
    /// `false` for rank-valued aggregates.
    pub higher_is_better: bool,
}

impl AggregateResult {
    pub fn value(&self, model: &str) -> Option<f64> {
        self.per_model
            .iter()
            .find(|(m, _)| m == model)
            .map(|&(_, v)| v)
    }

    pub fn values(&self) -> Vec<f64> {
        self.per_model.iter().map(|&(_, v)| v).collect()
    }
}

fn check_subset(m: &NormalizedMatrix, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut seen = HashSet::with_capacity(subset.len());
    for &t in subset {
        if t >= m.n_tasks() {
            return Err(Error::InvalidArgument(format!(
                "task index {t} out of range for {} tasks",
                m.n_tasks()
            )));
        }
        if !seen.insert(t) {
            return Err(Error::InvalidArgument(format!(
                "task {:?} repeated in subset",
                m.task_ids()[t]
            )));
        }
    }
    Ok(())
}

/// Subset columns, failing on the first missing cell.
fn columns(m: &NormalizedMatrix, subset: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_subset(m, subset)?;
    subset.iter().map(|&t| m.require_column(t)).collect()
}

fn task_weights(
    m: &NormalizedMatrix,
    subset: &[usize],
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<Vec<f64>> {
    subset
        .iter()
        .map(|&t| {
            let id = &m.task_ids()[t];
            let w = weights
                .and_then(|w| w.get(id).copied())
                .unwrap_or(m.metric(t).weight);
            if w.is_finite() && w > 0.0 {
                Ok(w)
            } else {
                Err(Error::Config(format!("weight for task {id:?} must be positive, got {w}")))
            }
        })
        .collect()
}

/// Sum that does not depend on term order, so permuting task columns cannot
/// change an aggregate in the last bit.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let num = canonical_sum(values.iter().zip(weights).map(|(v, w)| v * w).collect());
    num / canonical_sum(weights.to_vec())
}

fn per_model(
    m: &NormalizedMatrix,
    higher_is_better: bool,
    values: impl IntoIterator<Item = f64>,
) -> AggregateResult {
    AggregateResult {
        per_model: m.model_ids().iter().cloned().zip(values).collect(),
        higher_is_better,
    }
}

fn model_rows(cols: &[Vec<f64>], n_models: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    (0..n_models).map(move |i| cols.iter().map(|c| c[i]).collect())
}

pub fn arithmetic_mean(
    m: &NormalizedMatrix,
    subset: &[usize],
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<AggregateResult> {
    let cols = columns(m, subset)?;
    let w = task_weights(m, subset, weights)?;
    let values: Vec<f64> = model_rows(&cols, m.n_models())
        .map(|row| weighted_mean(&row, &w))
        .collect();
    Ok(per_model(m, true, values))
}

pub fn geometric_mean(
    m: &NormalizedMatrix,
    subset: &[usize],
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<AggregateResult> {
    let cols = columns(m, subset)?;
    let w = task_weights(m, subset, weights)?;
    for (ci, &t) in subset.iter().enumerate() {
        for (mi, &v) in cols[ci].iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::Domain(format!(
                    "geometric mean needs positive scores; model {:?} has {v} on task {:?}",
                    m.model_ids()[mi],
                    m.task_ids()[t]
                )));
            }
        }
    }
    let values: Vec<f64> = model_rows(&cols, m.n_models())
        .map(|row| {
            let logs: Vec<f64> = row.iter().map(|v| v.ln()).collect();
            weighted_mean(&logs, &w).exp()
        })
        .collect();
    Ok(per_model(m, true, values))
}

pub(crate) fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn median_score(m: &NormalizedMatrix, subset: &[usize]) -> Result<AggregateResult> {
    let cols = columns(m, subset)?;
    let values: Vec<f64> = model_rows(&cols, m.n_models()).map(median_of).collect();
    Ok(per_model(m, true, values))
}

/// Unweighted mean over groups of the weighted within-group means.
pub fn macro_average(
    m: &NormalizedMatrix,
    subset: &[usize],
    group_map: Option<&BTreeMap<String, String>>,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<AggregateResult> {
    let cols = columns(m, subset)?;
    let w = task_weights(m, subset, weights)?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (ci, &t) in subset.iter().enumerate() {
        let id = &m.task_ids()[t];
        let group = match group_map {
            Some(map) => map.get(id).map(String::as_str),
            None => m.metric(t).group.as_deref(),
        }
        .ok_or_else(|| Error::Config(format!("task {id:?} has no group for macro-averaging")))?;
        groups.entry(group).or_default().push(ci);
    }
    let values: Vec<f64> = model_rows(&cols, m.n_models())
        .map(|row| {
            let group_means: Vec<f64> = groups
                .values()
                .map(|members| {
                    let v: Vec<f64> = members.iter().map(|&c| row[c]).collect();
                    let gw: Vec<f64> = members.iter().map(|&c| w[c]).collect();
                    weighted_mean(&v, &gw)
                })
                .collect();
            let k = group_means.len() as f64;
            canonical_sum(group_means) / k
        })
        .collect();
    Ok(per_model(m, true, values))
}

fn mean_rank(cols: &[Vec<f64>], n_models: usize) -> Vec<f64> {
    let ranks: Vec<Vec<f64>> = cols.iter().map(|c| fractional_ranks(c, true)).collect();
    (0..n_models)
        .map(|i| canonical_sum(ranks.iter().map(|r| r[i]).collect()) / ranks.len() as f64)
        .collect()
}

/// Mean per-task fractional rank (1 = best); lower is better.
pub fn average_rank(m: &NormalizedMatrix, subset: &[usize]) -> Result<AggregateResult> {
    let cols = columns(m, subset)?;
    Ok(per_model(m, false, mean_rank(&cols, m.n_models())))
}

/// Average rank after replacing each score `s` by `floor(s / bin_width)`.
pub fn robust_average_rank(
    m: &NormalizedMatrix,
    subset: &[usize],
    bin_width: f64,
) -> Result<AggregateResult> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Config(format!("bin_width must be positive, got {bin_width}")));
    }
    let cols: Vec<Vec<f64>> = columns(m, subset)?
        .into_iter()
        .map(|c| c.into_iter().map(|s| (s / bin_width).floor()).collect())
        .collect();
    Ok(per_model(m, false, mean_rank(&cols, m.n_models())))
}

/// Exhaustive-ballot ranking.
///
/// Each round every task votes for its best remaining model, splitting the
/// vote evenly on ties. The models with the fewest votes are eliminated
/// together into the worst free positions; within that eliminated group the
/// order is settled by running the same ballot restricted to the group. If
/// every remaining model has the same vote count they all tie.
pub fn elimination_ranking(m: &NormalizedMatrix, subset: &[usize]) -> Result<Ranking> {
    let cols = columns(m, subset)?;
    let pool: Vec<usize> = (0..m.n_models()).collect();
    let tiers = ballot(&cols, &pool);
    let mut ranks = vec![0.0; m.n_models()];
    let mut placed = 0usize;
    for tier in tiers {
        let rank = placed as f64 + (tier.len() as f64 + 1.0) / 2.0;
        for &i in &tier {
            ranks[i] = rank;
        }
        placed += tier.len();
    }
    Ranking::new(m.model_ids().iter().cloned().zip(ranks).collect())
}

/// Tiers of `pool`, best first.
fn ballot(cols: &[Vec<f64>], pool: &[usize]) -> Vec<Vec<usize>> {
    let mut remaining = pool.to_vec();
    let mut worst_first: Vec<Vec<usize>> = Vec::new();
    while remaining.len() > 1 {
        let mut votes = vec![BigRational::zero(); remaining.len()];
        for col in cols {
            let best = remaining
                .iter()
                .map(|&i| col[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let tops: Vec<usize> = (0..remaining.len())
                .filter(|&j| col[remaining[j]] == best)
                .collect();
            let share = BigRational::new(BigInt::from(1), BigInt::from(tops.len()));
            for j in tops {
                votes[j] += &share;
            }
        }
        let fewest = votes.iter().min().cloned().expect("non-empty pool");
        let mut losers = Vec::new();
        let mut survivors = Vec::new();
        for (&i, v) in remaining.iter().zip(&votes) {
            if *v == fewest {
                losers.push(i);
            } else {
                survivors.push(i);
            }
        }
        if survivors.is_empty() {
            worst_first.push(losers);
            remaining.clear();
            break;
        }
        worst_first.extend(ballot(cols, &losers).into_iter().rev());
        remaining = survivors;
    }
    if !remaining.is_empty() {
        worst_first.push(remaining);
    }
    worst_first.reverse();
    worst_first
}

/// Per-model aggregate for any score-valued or rank-valued method.
///
/// Fails for [`Method::EliminationRanking`], which produces a ranking only.
pub fn aggregate_scores(
    m: &NormalizedMatrix,
    subset: &[usize],
    spec: &AggregationSpec,
) -> Result<AggregateResult> {
    spec.validate()?;
    let weights = spec.weights.as_ref();
    match spec.method {
        Method::ArithmeticMean => arithmetic_mean(m, subset, weights),
        Method::GeometricMean => geometric_mean(m, subset, weights),
        Method::Median => median_score(m, subset),
        Method::MacroAverage => macro_average(m, subset, spec.group_map.as_ref(), weights),
        Method::AverageRank => average_rank(m, subset),
        Method::RobustAverageRank => robust_average_rank(m, subset, spec.bin_width),
        Method::EliminationRanking => Err(Error::InvalidArgument(
            "elimination_ranking yields a ranking, not per-model scores".into(),
        )),
    }
}

/// Ranks models on `subset` according to `spec`.
pub fn aggregate(m: &NormalizedMatrix, subset: &[usize], spec: &AggregationSpec) -> Result<Ranking> {
    match spec.method {
        Method::EliminationRanking => {
            spec.validate()?;
            elimination_ranking(m, subset)
        }
        _ => rank_models(&aggregate_scores(m, subset, spec)?),
    }
}
