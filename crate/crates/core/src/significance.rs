//! Pairwise model comparison: is model B better than model A?
//!
//! - [`wilcoxon_signed_rank`] across datasets (one metric per dataset per model),
//! - [`per_dataset_tests`]: permutation tests on replicate runs, one per dataset,
//!   to be combined with [`holm_correction`],
//! - [`prob_a_le_b`]: bootstrap estimate of P(mean A ≤ mean B).
//!
//! Differences are always taken as `b - a`, so `Alternative::BGreater` is the
//! one-sided "B outperforms A" hypothesis.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rankstats::{binomial, enumerate_subsets, fractional_ranks};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    labels: Vec<String>,
    a_values: Vec<f64>,
    b_values: Vec<f64>,
}

impl PairedSamples {
    pub fn new(labels: Vec<String>, a_values: Vec<f64>, b_values: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != a_values.len() || labels.len() != b_values.len() {
            return Err(Error::InvalidArgument(format!(
                "paired samples need equal non-zero lengths, got {}/{}/{}",
                labels.len(),
                a_values.len(),
                b_values.len()
            )));
        }
        if a_values.iter().chain(&b_values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("paired samples must be finite".into()));
        }
        Ok(Self {
            labels,
            a_values,
            b_values,
        })
    }

    /// Unlabelled convenience constructor (`d0, d1, ...`).
    pub fn from_values(a_values: Vec<f64>, b_values: Vec<f64>) -> Result<Self> {
        let labels = (0..a_values.len()).map(|i| format!("d{i}")).collect();
        Self::new(labels, a_values, b_values)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b_values
    }

    pub fn differences(&self) -> Vec<f64> {
        self.b_values
            .iter()
            .zip(&self.a_values)
            .map(|(b, a)| b - a)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    BGreater,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Alternative::TwoSided),
            "b-greater" | "greater" => Ok(Alternative::BGreater),
            other => Err(Error::InvalidArgument(format!("unknown alternative {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub alternative: Alternative,
    pub exact: bool,
    /// Observations entering the test (after zero drops for Wilcoxon).
    pub n: usize,
    pub zero_dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<u64>,
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Exact null distribution of the signed-rank statistic W+ for a fixed set of
/// (possibly tied) ranks: every one of the 2^n sign assignments is equally
/// likely. Ranks are stored doubled so tied half-ranks stay integral.
#[derive(Debug, Clone)]
pub struct SignedRankNull {
    n: usize,
    /// `counts[s]` = number of sign assignments with 2·W+ = s.
    counts: Vec<u64>,
}

impl SignedRankNull {
    pub const MAX_N: usize = 63;

    pub fn new(ranks: &[f64]) -> Result<Self> {
        if ranks.len() > Self::MAX_N {
            return Err(Error::InvalidArgument(format!(
                "exact signed-rank distribution supports n <= {}",
                Self::MAX_N
            )));
        }
        let doubled = doubled_ranks(ranks)?;
        let max: u64 = doubled.iter().sum();
        let mut counts = vec![0u64; max as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &doubled {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        Ok(Self {
            n: ranks.len(),
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 2^n.
    pub fn total_assignments(&self) -> u64 {
        1u64 << self.n
    }

    /// `(w_plus, probability)` for every attainable W+.
    pub fn pmf(&self) -> Vec<(f64, f64)> {
        let total = self.total_assignments() as f64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (s as f64 / 2.0, c as f64 / total))
            .collect()
    }

    pub fn count_at_least(&self, doubled_w: u64) -> u64 {
        self.counts.iter().skip(doubled_w as usize).sum()
    }

    pub fn count_at_most(&self, doubled_w: u64) -> u64 {
        self.counts
            .iter()
            .take(doubled_w as usize + 1)
            .sum()
    }
}

fn doubled_ranks(ranks: &[f64]) -> Result<Vec<u64>> {
    ranks
        .iter()
        .map(|&r| {
            let d = r * 2.0;
            if d.fract() != 0.0 || d < 2.0 {
                Err(Error::InvalidArgument(format!("{r} is not a fractional rank")))
            } else {
                Ok(d as u64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WilcoxonOptions {
    /// Largest n (after dropping zeros) that uses the exact distribution.
    pub exact_max_n: usize,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self { exact_max_n: 20 }
    }
}

pub fn wilcoxon_signed_rank(s: &PairedSamples, alternative: Alternative) -> Result<TestResult> {
    wilcoxon_signed_rank_with(s, alternative, WilcoxonOptions::default())
}

/// Signed-rank test on `b - a`. Zero differences are dropped; |d| ties get
/// average ranks.
pub fn wilcoxon_signed_rank_with(
    s: &PairedSamples,
    alternative: Alternative,
    opts: WilcoxonOptions,
) -> Result<TestResult> {
    let all = s.differences();
    let d: Vec<f64> = all.iter().copied().filter(|&x| x != 0.0).collect();
    let zero_dropped = all.len() - d.len();
    if d.is_empty() {
        return Err(Error::DegenerateInput(
            "every paired difference is zero".into(),
        ));
    }
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = fractional_ranks(&abs, false);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();

    let exact = n <= opts.exact_max_n.min(SignedRankNull::MAX_N);
    let p = if exact {
        let null = SignedRankNull::new(&ranks)?;
        let total = null.total_assignments() as f64;
        let w2 = (w_plus * 2.0).round() as u64;
        let upper = null.count_at_least(w2) as f64 / total;
        match alternative {
            Alternative::BGreater => upper,
            Alternative::TwoSided => {
                let lower = null.count_at_most(w2) as f64 / total;
                (2.0 * upper.min(lower)).min(1.0)
            }
        }
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            tie_term += t * t * t - t;
            i = j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            match alternative {
                Alternative::BGreater => normal.sf((w_plus - mean - 0.5) / sd),
                Alternative::TwoSided => {
                    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
                    (2.0 * normal.sf(z)).min(1.0)
                }
            }
        }
    };
    Ok(TestResult {
        method: "wilcoxon-signed-rank".into(),
        statistic: w_plus,
        p_value: clamp_p(p),
        alternative,
        exact,
        n,
        zero_dropped,
        seed: None,
        resamples: None,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Replicates {
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

/// `{"datasets": {"<id>": {"A": [...], "B": [...]}}}`
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub datasets: BTreeMap<String, Replicates>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationOptions {
    /// Enumerate every reassignment when there are at most this many.
    pub exact_limit: u64,
    /// Monte-Carlo resamples otherwise.
    pub resamples: u64,
    pub seed: u64,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        Self {
            exact_limit: 100_000,
            resamples: 100_000,
            seed: 0,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Permutation test on `mean(b) - mean(a)`.
///
/// Exact: all C(na + nb, nb) relabelings, p = fraction with a statistic at
/// least as extreme as observed. Monte-Carlo: `(1 + hits) / (1 + R)`.
pub fn permutation_test(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    opts: &PermutationOptions,
) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("permutation test needs two non-empty groups".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (na, nb) = (a.len(), b.len());
    let total: f64 = pooled.iter().sum();
    let statistic = mean(b) - mean(a);
    let scale = pooled.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-10 * (1.0 + scale);
    let stat_of = |sum_b: f64| sum_b / nb as f64 - (total - sum_b) / na as f64;
    let extreme = |s: f64| match alternative {
        Alternative::BGreater => s >= statistic - tol,
        Alternative::TwoSided => s.abs() >= statistic.abs() - tol,
    };

    let reassignments = binomial((na + nb) as u64, nb as u64);
    let exact = matches!(reassignments, Some(c) if c <= opts.exact_limit);
    let (p, resamples) = if exact {
        let mut hits = 0u64;
        let mut count = 0u64;
        for idx in enumerate_subsets(na + nb, nb)? {
            let sum_b: f64 = idx.iter().map(|&i| pooled[i]).sum();
            if extreme(stat_of(sum_b)) {
                hits += 1;
            }
            count += 1;
        }
        (hits as f64 / count as f64, None)
    } else {
        if opts.resamples == 0 {
            return Err(Error::InvalidArgument("resamples must be at least 1".into()));
        }
        let mut rng = seed::rng(opts.seed);
        let mut shuffled = pooled.clone();
        let mut hits = 0u64;
        for _ in 0..opts.resamples {
            shuffled.shuffle(&mut rng);
            let sum_b: f64 = shuffled[..nb].iter().sum();
            if extreme(stat_of(sum_b)) {
                hits += 1;
            }
        }
        ((1 + hits) as f64 / (1 + opts.resamples) as f64, Some(opts.resamples))
    };
    Ok(TestResult {
        method: "permutation-difference-of-means".into(),
        statistic,
        p_value: clamp_p(p),
        alternative,
        exact,
        n: na + nb,
        zero_dropped: 0,
        seed: (!exact).then_some(opts.seed),
        resamples,
    })
}

/// One permutation test per dataset, in dataset-id order. Each Monte-Carlo
/// stream is seeded from `opts.seed` and the dataset id.
pub fn per_dataset_tests(
    replicates: &BTreeMap<String, Replicates>,
    alternative: Alternative,
    opts: &PermutationOptions,
) -> Result<Vec<(String, TestResult)>> {
    for (id, r) in replicates {
        if r.a.len() < 2 || r.b.len() < 2 {
            return Err(Error::Config(format!(
                "dataset {id:?} needs at least 2 replicates per model (A: {}, B: {})",
                r.a.len(),
                r.b.len()
            )));
        }
    }
    replicates
        .iter()
        .map(|(id, r)| {
            let sub = PermutationOptions {
                seed: seed::derive(opts.seed, &format!("permutation/{id}")),
                ..*opts
            };
            Ok((id.clone(), permutation_test(&r.a, &r.b, alternative, &sub)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    Holm,
    Bonferroni,
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "holm" => Ok(Correction::Holm),
            "bonferroni" => Ok(Correction::Bonferroni),
            other => Err(Error::InvalidArgument(format!("unknown correction {other:?}"))),
        }
    }
}

/// Rejection decisions in input order.
///
/// Holm: sort ascending, reject while `p_(i) <= alpha / (m - i + 1)`, stop at
/// the first failure. Bonferroni: reject when `p * m <= alpha`.
pub fn holm_correction(p_values: &[f64], alpha: f64, mode: Correction) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if let Some(p) = p_values.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidArgument(format!("p-value {p} outside (0, 1]")));
    }
    let m = p_values.len();
    match mode {
        Correction::Bonferroni => Ok(p_values.iter().map(|p| p * m as f64 <= alpha).collect()),
        Correction::Holm => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
            let mut rejected = vec![false; m];
            for (i, &idx) in order.iter().enumerate() {
                if p_values[idx] <= alpha / (m - i) as f64 {
                    rejected[idx] = true;
                } else {
                    break;
                }
            }
            Ok(rejected)
        }
    }
}

fn resampled_mean<R: Rng>(v: &[f64], rng: &mut R) -> f64 {
    (0..v.len()).map(|_| v[rng.gen_range(0..v.len())]).sum::<f64>() / v.len() as f64
}

/// Bootstrap estimate of P(mean A ≤ mean B): both samples are resampled with
/// replacement, independently, `bootstrap_n` times. Ties count toward A ≤ B.
pub fn prob_a_le_b(samples_a: &[f64], samples_b: &[f64], bootstrap_n: u64, seed: u64) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::InvalidArgument("bootstrap needs non-empty samples".into()));
    }
    if bootstrap_n < 1000 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap_n must be at least 1000, got {bootstrap_n}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut hits = 0u64;
    for _ in 0..bootstrap_n {
        let ma = resampled_mean(samples_a, &mut rng);
        let mb = resampled_mean(samples_b, &mut rng);
        if ma <= mb {
            hits += 1;
        }
    }
    Ok(hits as f64 / bootstrap_n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_five_is_one_in_32() {
        let s = PairedSamples::from_values(vec![0.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let r = wilcoxon_signed_rank(&s, Alternative::BGreater).unwrap();
        assert!(r.exact);
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 1.0 / 32.0);
        let two = wilcoxon_signed_rank(&s, Alternative::TwoSided).unwrap();
        assert_eq!(two.p_value, 2.0 / 32.0);
    }

    #[test]
    fn symmetric_pair_is_maximal() {
        let s = PairedSamples::from_values(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let r = wilcoxon_signed_rank(&s, Alternative::TwoSided).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_are_dropped_and_all_zero_is_degenerate() {
        let s = PairedSamples::from_values(vec![1.0, 1.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap();
        let r = wilcoxon_signed_rank(&s, Alternative::BGreater).unwrap();
        assert_eq!((r.n, r.zero_dropped), (2, 1));
        assert_eq!(r.p_value, 0.25);
        let s = PairedSamples::from_values(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            wilcoxon_signed_rank(&s, Alternative::TwoSided),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn normal_approximation_above_threshold() {
        let a = vec![0.0; 30];
        let b: Vec<f64> = (1..=30).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
        let s = PairedSamples::from_values(a, b).unwrap();
        let approx = wilcoxon_signed_rank(&s, Alternative::BGreater).unwrap();
        assert!(!approx.exact);
        let exact = wilcoxon_signed_rank_with(&s, Alternative::BGreater, WilcoxonOptions { exact_max_n: 30 }).unwrap();
        assert!(exact.exact);
        assert!((approx.p_value - exact.p_value).abs() < 0.01, "{} vs {}", approx.p_value, exact.p_value);
    }

    #[test]
    fn paired_samples_validation() {
        assert!(PairedSamples::from_values(vec![], vec![]).is_err());
        assert!(PairedSamples::from_values(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PairedSamples::from_values(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn permutation_examples() {
        let opts = PermutationOptions::default();
        let r = permutation_test(&[1.0, 1.0], &[1.0, 1.0], Alternative::TwoSided, &opts).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = permutation_test(&[0.0; 3], &[1.0; 3], Alternative::BGreater, &opts).unwrap();
        assert!(r.exact);
        assert_eq!(r.p_value, 0.05);
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn per_dataset_requires_two_replicates() {
        let mut d = BTreeMap::new();
        d.insert("x".to_owned(), Replicates { a: vec![1.0], b: vec![1.0, 2.0] });
        assert!(matches!(
            per_dataset_tests(&d, Alternative::BGreater, &PermutationOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_correction(&[0.04], 0.05, Correction::Holm).unwrap(), vec![true]);
        assert_eq!(holm_correction(&[0.01, 0.04], 0.05, Correction::Holm).unwrap(), vec![true, true]);
        assert_eq!(holm_correction(&[0.04, 0.01], 0.05, Correction::Holm).unwrap(), vec![true, true]);
        assert_eq!(holm_correction(&[0.03, 0.04], 0.05, Correction::Holm).unwrap(), vec![false, false]);
        assert_eq!(
            holm_correction(&[0.01, 0.04], 0.05, Correction::Bonferroni).unwrap(),
            vec![true, false]
        );
        assert!(holm_correction(&[0.0], 0.05, Correction::Holm).is_err());
        assert!(holm_correction(&[0.5], 1.0, Correction::Holm).is_err());
    }

    #[test]
    fn bootstrap_examples() {
        assert_eq!(prob_a_le_b(&[3.0], &[3.0], 1000, 1).unwrap(), 1.0);
        assert_eq!(prob_a_le_b(&[0.0; 4], &[10.0; 4], 1000, 1).unwrap(), 1.0);
        assert_eq!(prob_a_le_b(&[10.0; 4], &[0.0; 4], 1000, 1).unwrap(), 0.0);
        assert!(prob_a_le_b(&[1.0], &[2.0], 999, 1).is_err());
        assert!(prob_a_le_b(&[], &[2.0], 1000, 1).is_err());
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 3.0, 1.5, 5.0];
        assert_eq!(prob_a_le_b(&a, &b, 5000, 9).unwrap(), prob_a_le_b(&a, &b, 5000, 9).unwrap());
    }
}
