//! Rankings and the disagreement audits built on them.
//!
//! A [`Ranking`] is a fractional ranking (rank 1 = best, ties share the mean
//! of the positions they span). Audits enumerate task subsets, rank models on
//! each, and measure how much the outcome moves: distinct Top-k tuples
//! ([`unique_topk_audit`]) or Kendall tau-b against the full-benchmark ranking
//! ([`subset_tau_profile`]).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{aggregate, AggregateResult, AggregationSpec};
use crate::error::{Error, Result};
use crate::scorebank::NormalizedMatrix;
use crate::seed;

/// Fractional ranks of `values`; exactly equal values share the average of
/// their positions.
pub fn fractional_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        if higher_is_better {
            ord.reverse()
        } else {
            ord
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    entries: Vec<(String, f64)>,
}

impl Ranking {
    /// Validates that `entries` is a fractional ranking over distinct models.
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("ranking over zero models".into()));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for (m, r) in &entries {
            if !seen.insert(m.as_str()) {
                return Err(Error::Schema(format!("model {m:?} ranked twice")));
            }
            if !(r.is_finite() && *r >= 1.0) {
                return Err(Error::InvalidArgument(format!("rank {r} for model {m:?}")));
            }
        }
        let n = entries.len() as f64;
        let sum: f64 = entries.iter().map(|(_, r)| r).sum();
        if (sum - n * (n + 1.0) / 2.0).abs() > 1e-9 * n * n {
            return Err(Error::InvalidArgument(format!(
                "ranks sum to {sum}, expected {}",
                n * (n + 1.0) / 2.0
            )));
        }
        Ok(Self { entries })
    }

    /// Entries in input (matrix row) order.
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank_of(&self, model: &str) -> Option<f64> {
        self.entries.iter().find(|(m, _)| m == model).map(|&(_, r)| r)
    }

    /// Models best first; ties keep input order.
    pub fn order(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| self.entries[a].1.total_cmp(&self.entries[b].1));
        idx.into_iter().map(|i| self.entries[i].0.as_str()).collect()
    }

    /// Tied groups, best first.
    pub fn positions(&self) -> Vec<BTreeSet<String>> {
        let mut by_rank: Vec<(f64, &str)> =
            self.entries.iter().map(|(m, r)| (*r, m.as_str())).collect();
        by_rank.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        let mut out: Vec<BTreeSet<String>> = Vec::new();
        let mut last = f64::NAN;
        for (r, m) in by_rank {
            if r == last {
                out.last_mut().expect("group started").insert(m.to_owned());
            } else {
                out.push(BTreeSet::from([m.to_owned()]));
                last = r;
            }
        }
        out
    }

    /// Ranks of `models`, in that order.
    fn aligned(&self, models: &[&str]) -> Option<Vec<f64>> {
        let lookup: HashMap<&str, f64> =
            self.entries.iter().map(|(m, r)| (m.as_str(), *r)).collect();
        models.iter().map(|m| lookup.get(m).copied()).collect()
    }
}

/// Ranks models by aggregate value, best first per `higher_is_better`.
pub fn rank_models(agg: &AggregateResult) -> Result<Ranking> {
    let values = agg.values();
    let ranks = fractional_ranks(&values, agg.higher_is_better);
    Ranking::new(
        agg.per_model
            .iter()
            .map(|(m, _)| m.clone())
            .zip(ranks)
            .collect(),
    )
}

/// Kendall tau-b between two rankings of the same models.
///
/// Knight's O(n log n) scheme: sort by the first ranking, then count the
/// swaps a merge sort on the second ranking needs.
pub fn kendall_tau_b(a: &Ranking, b: &Ranking) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ModelSetMismatch(format!(
            "{} models vs {} models",
            a.len(),
            b.len()
        )));
    }
    let models: Vec<&str> = a.entries.iter().map(|(m, _)| m.as_str()).collect();
    let ys = b.aligned(&models).ok_or_else(|| {
        Error::ModelSetMismatch("rankings cover different models".into())
    })?;
    let xs: Vec<f64> = a.entries.iter().map(|&(_, r)| r).collect();
    tau_b(&xs, &ys)
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

pub(crate) fn tau_b(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as u64;
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    let n0 = n * n.saturating_sub(1) / 2;
    let mut n1 = 0u64; // tied in x
    let mut n3 = 0u64; // tied in both
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        let run = (j - i) as u64;
        n1 += run * (run - 1) / 2;
        let joint: Vec<f64> = pairs[i..j].iter().map(|p| p.1).collect();
        n3 += tie_pairs(&joint);
        i = j;
    }
    let mut y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(y.len());
    let swaps = merge_count(&mut y, &mut buf);
    let n2 = tie_pairs(&y);

    if n0 == n1 || n0 == n2 {
        return Err(Error::UndefinedCorrelation(
            "one ranking ties every model".into(),
        ));
    }
    // concordant - discordant
    let s = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

/// Leading positions of a ranking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TopK {
    pub k: usize,
    /// Position i holds the set of models tied at that place.
    pub positions: Vec<BTreeSet<String>>,
    /// A tie crossed the k-th place and was included whole.
    pub boundary_tied: bool,
}

impl TopK {
    pub fn model_count(&self) -> usize {
        self.positions.iter().map(BTreeSet::len).sum()
    }

    /// `A, B, {C, D}` style rendering.
    pub fn label(&self) -> String {
        self.positions
            .iter()
            .map(|p| {
                if p.len() == 1 {
                    p.iter().next().cloned().unwrap_or_default()
                } else {
                    format!("{{{}}}", p.iter().cloned().collect::<Vec<_>>().join(", "))
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn top_k(r: &Ranking, k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut positions = Vec::new();
    let mut count = 0;
    let mut boundary_tied = false;
    for group in r.positions() {
        if count >= k {
            break;
        }
        count += group.len();
        if count > k {
            boundary_tied = true;
        }
        positions.push(group);
    }
    Ok(TopK {
        k,
        positions,
        boundary_tied,
    })
}

/// C(n, k), or `None` on u64 overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Lexicographic stream of `size`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().expect("checked above");
        let k = c.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if c[i] < self.n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn enumerate_subsets(n_tasks: usize, size: usize) -> Result<Combinations> {
    if size == 0 || size > n_tasks {
        return Err(Error::InvalidArgument(format!(
            "subset size {size} outside 1..={n_tasks}"
        )));
    }
    Ok(Combinations {
        n: n_tasks,
        current: Some((0..size).collect()),
    })
}

/// The `rank`-th (0-based) lexicographic `size`-subset of `0..n`.
pub fn unrank_subset(n: usize, size: usize, mut rank: u64) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(size);
    let mut next = 0;
    for pos in 0..size {
        let mut c = next;
        loop {
            if c + (size - pos) > n {
                return None;
            }
            let with_c = binomial((n - c - 1) as u64, (size - pos - 1) as u64)?;
            if rank < with_c {
                break;
            }
            rank -= with_c;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    (rank == 0).then_some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditOptions {
    /// Largest subset count enumerated exhaustively; above it a seeded
    /// uniform sample of this many subsets is drawn without replacement.
    pub budget: u64,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            budget: 1_000_000,
            seed: 0,
        }
    }
}

/// Subsets of one size, in lexicographic order, with their rankings.
#[derive(Debug, Clone)]
pub struct SubsetRankings {
    pub size: usize,
    pub total: u64,
    pub sampled: bool,
    pub subsets: Vec<Vec<usize>>,
    pub rankings: Vec<Ranking>,
}

fn choose_subsets(n_tasks: usize, size: usize, opts: &AuditOptions) -> Result<(Vec<Vec<usize>>, u64, bool)> {
    let iter = enumerate_subsets(n_tasks, size)?;
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("sampling budget must be at least 1".into()));
    }
    let total = binomial(n_tasks as u64, size as u64)
        .ok_or_else(|| Error::InvalidArgument("subset count overflows u64".into()))?;
    if total <= opts.budget {
        return Ok((iter.collect(), total, false));
    }
    // Floyd's algorithm: `budget` distinct ranks in 0..total.
    let mut rng = seed::rng(seed::derive_indexed(opts.seed, "subset-sample", size as u64));
    let mut picked = BTreeSet::new();
    for j in total - opts.budget..total {
        let t = rng.gen_range(0..=j);
        if !picked.insert(t) {
            picked.insert(j);
        }
    }
    let subsets = picked
        .into_iter()
        .map(|r| unrank_subset(n_tasks, size, r).expect("rank below total"))
        .collect();
    Ok((subsets, total, true))
}

pub fn subset_rankings(
    m: &NormalizedMatrix,
    spec: &AggregationSpec,
    size: usize,
    opts: &AuditOptions,
) -> Result<SubsetRankings> {
    spec.validate()?;
    let (subsets, total, sampled) = choose_subsets(m.n_tasks(), size, opts)?;
    let rankings = subsets
        .par_iter()
        .map(|s| aggregate(m, s, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubsetRankings {
        size,
        total,
        sampled,
        subsets,
        rankings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetTopK {
    pub subset: Vec<String>,
    pub top: TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetAuditResult {
    #[serde(rename = "size")]
    pub subset_size: usize,
    pub k: usize,
    #[serde(rename = "unique")]
    pub unique_count: usize,
    #[serde(rename = "total")]
    pub total_combinations: u64,
    /// Number of subsets actually evaluated (< total when sampled).
    pub evaluated: usize,
    pub sampled: bool,
    #[serde(rename = "subsets")]
    pub per_subset_topk: Vec<SubsetTopK>,
}

impl SubsetRankings {
    pub fn audit(&self, m: &NormalizedMatrix, k: usize) -> Result<SubsetAuditResult> {
        let tops = self
            .rankings
            .iter()
            .map(|r| top_k(r, k))
            .collect::<Result<Vec<_>>>()?;
        let unique: HashSet<&[BTreeSet<String>]> =
            tops.iter().map(|t| t.positions.as_slice()).collect();
        let unique_count = unique.len();
        let per_subset_topk = self
            .subsets
            .iter()
            .zip(tops)
            .map(|(s, top)| SubsetTopK {
                subset: s.iter().map(|&t| m.task_ids()[t].clone()).collect(),
                top,
            })
            .collect();
        Ok(SubsetAuditResult {
            subset_size: self.size,
            k,
            unique_count,
            total_combinations: self.total,
            evaluated: self.subsets.len(),
            sampled: self.sampled,
            per_subset_topk,
        })
    }
}

/// Counts distinct Top-k tuples across all task subsets of one size.
pub fn unique_topk_audit(
    m: &NormalizedMatrix,
    spec: &AggregationSpec,
    size: usize,
    k: usize,
    opts: &AuditOptions,
) -> Result<SubsetAuditResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    subset_rankings(m, spec, size, opts)?.audit(m, k)
}

/// [`unique_topk_audit`] over every (size, k) pair, sizes outer.
pub fn audit_grid(
    m: &NormalizedMatrix,
    spec: &AggregationSpec,
    sizes: &[usize],
    ks: &[usize],
    opts: &AuditOptions,
) -> Result<Vec<SubsetAuditResult>> {
    if let Some(0) = ks.iter().copied().min() {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(sizes.len() * ks.len());
    for &size in sizes {
        let ranked = subset_rankings(m, spec, size, opts)?;
        for &k in ks {
            out.push(ranked.audit(m, k)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauEntry {
    pub subset: Vec<String>,
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

/// Tau-b between the all-task ranking and each subset's ranking.
///
/// Aggregation failures propagate; an undefined correlation is recorded in
/// the entry instead.
pub fn subset_tau_profile(
    m: &NormalizedMatrix,
    spec: &AggregationSpec,
    subsets: &[Vec<usize>],
) -> Result<Vec<TauEntry>> {
    let all: Vec<usize> = (0..m.n_tasks()).collect();
    let full = aggregate(m, &all, spec)?;
    subsets
        .par_iter()
        .map(|s| {
            let r = aggregate(m, s, spec)?;
            let names = s.iter().map(|&t| m.task_ids()[t].clone()).collect();
            Ok(match kendall_tau_b(&full, &r) {
                Ok(tau) => TauEntry {
                    subset: names,
                    tau: Some(tau),
                    undefined: None,
                },
                Err(Error::UndefinedCorrelation(why)) => TauEntry {
                    subset: names,
                    tau: None,
                    undefined: Some(why),
                },
                Err(e) => return Err(e),
            })
        })
        .collect()
}

/// Top-k per subset, in input order.
pub fn topk_table(
    m: &NormalizedMatrix,
    spec: &AggregationSpec,
    subsets: &[Vec<usize>],
    k: usize,
) -> Result<Vec<SubsetTopK>> {
    subsets
        .iter()
        .map(|s| {
            let r = aggregate(m, s, spec)?;
            Ok(SubsetTopK {
                subset: s.iter().map(|&t| m.task_ids()[t].clone()).collect(),
                top: top_k(&r, k)?,
            })
        })
        .collect()
}

/// Plain-text table: one row per subset, one column per place. Tied places
/// print as `{A, B}` and boundary ties are marked with `*`.
pub fn render_topk_table(rows: &[SubsetTopK]) -> String {
    let width = rows
        .iter()
        .map(|r| r.subset.join(" + ").len())
        .max()
        .unwrap_or(0)
        .max("tasks".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | top", "tasks");
    for row in rows {
        let mark = if row.top.boundary_tied { " *" } else { "" };
        let _ = writeln!(out, "{:<width$} | {}{}", row.subset.join(" + "), row.top.label(), mark);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementMatrix {
    pub labels: Vec<String>,
    /// `tau[i][j]`, `None` where the correlation is undefined.
    pub tau: Vec<Vec<Option<f64>>>,
}

/// Pairwise tau-b between the rankings several aggregation specs produce.
pub fn aggregator_agreement(
    m: &NormalizedMatrix,
    specs: &[AggregationSpec],
    subset: &[usize],
) -> Result<AgreementMatrix> {
    if specs.len() < 2 {
        return Err(Error::InvalidArgument(
            "aggregator agreement needs at least two specs".into(),
        ));
    }
    let rankings = specs
        .iter()
        .map(|s| aggregate(m, subset, s))
        .collect::<Result<Vec<_>>>()?;
    let n = specs.len();
    let mut tau = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = match kendall_tau_b(&rankings[i], &rankings[j]) {
                Ok(v) => Some(v),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            tau[i][j] = v;
            tau[j][i] = v;
        }
    }
    Ok(AgreementMatrix {
        labels: specs.iter().map(|s| s.method.to_string()).collect(),
        tau,
    })
}
