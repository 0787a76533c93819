//! Simulation of adaptive holdout reuse.
//!
//! A [`HoldoutServer`] hides a uniform-random binary label vector and answers
//! accuracy queries, either exactly ([`Mechanism::Naive`]) or through a
//! ladder that only reveals rounded improvements over the best answer so far.
//! [`boosting_attack`] spends `i` queries on random predictors, keeps the ones
//! that appear better than chance and majority-votes them. Against the naive
//! server the final predictor looks far better than chance on the holdout
//! while staying at chance on fresh labels.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Packed binary vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn random<R: RngCore>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.len);
        }
        Self {
            len: self.len,
            words,
        }
    }

    /// Number of positions where both vectors agree. Lengths must match.
    pub fn agreement(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        let full: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (!(a ^ b)).count_ones())
            .sum();
        // the padding bits of the last word agree spuriously
        full as usize - (self.words.len() * 64 - self.len)
    }

    pub fn accuracy(&self, labels: &Self) -> f64 {
        self.agreement(labels) as f64 / self.len as f64
    }
}

fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Mechanism {
    Naive,
    Ladder { step: f64 },
}

impl Mechanism {
    /// Ladder with the default step `1/sqrt(n)`.
    pub fn default_ladder(n: usize) -> Self {
        Mechanism::Ladder {
            step: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Naive => "naive",
            Mechanism::Ladder { .. } => "ladder",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HoldoutServer {
    labels: BinaryVector,
    mechanism: Mechanism,
    query_count: u64,
    best_reported: f64,
    seed: u64,
}

/// New server with `n` hidden uniform-random labels derived from `seed`.
pub fn new_holdout(n: usize, mechanism: Mechanism, seed: u64) -> Result<HoldoutServer> {
    if n < 1 {
        return Err(Error::InvalidArgument("holdout size must be at least 1".into()));
    }
    if let Mechanism::Ladder { step } = mechanism {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("ladder step must be positive, got {step}")));
        }
    }
    let mut rng = seed::rng(seed::derive(seed, "holdout-labels"));
    Ok(HoldoutServer {
        labels: BinaryVector::random(n, &mut rng),
        mechanism,
        query_count: 0,
        best_reported: 0.0,
        seed,
    })
}

impl HoldoutServer {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn best_reported(&self) -> f64 {
        self.best_reported
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The hidden labels. Simulation bookkeeping only; an attacker never sees them.
    pub fn labels(&self) -> &BinaryVector {
        &self.labels
    }

    /// Answers one accuracy query through the server's mechanism.
    pub fn query(&mut self, predictions: &BinaryVector) -> Result<f64> {
        let acc = self.empirical_accuracy(predictions)?;
        self.query_count += 1;
        Ok(match self.mechanism {
            Mechanism::Naive => acc,
            Mechanism::Ladder { step } => {
                if acc >= self.best_reported + step {
                    self.best_reported = (acc / step).round() * step;
                }
                self.best_reported
            }
        })
    }

    /// Exact holdout accuracy, without counting as a query.
    pub fn empirical_accuracy(&self, predictions: &BinaryVector) -> Result<f64> {
        if predictions.len() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for a holdout of size {}",
                predictions.len(),
                self.labels.len()
            )));
        }
        Ok(predictions.accuracy(&self.labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub i: u64,
    /// Holdout accuracy of the final predictor.
    pub reported_accuracy: f64,
    /// Accuracy of the same predictor on an independent fresh label draw.
    pub true_accuracy: f64,
    pub collected: usize,
    pub bound_value: f64,
}

pub fn reuse_bound(n: u64, i: u64) -> Result<f64> {
    if n < 1 || i < 1 {
        return Err(Error::InvalidArgument(format!(
            "reuse bound needs n, i >= 1 (n = {n}, i = {i})"
        )));
    }
    Ok((i as f64 / n as f64).sqrt())
}

/// Coordinate-wise majority of `votes`; exact ties are broken by `rng`. An
/// empty collection yields a uniform-random vector.
pub fn majority_vote<R: RngCore>(votes: &[BinaryVector], len: usize, rng: &mut R) -> BinaryVector {
    if votes.is_empty() {
        return BinaryVector::random(len, rng);
    }
    let mut counts = vec![0u32; len];
    for v in votes {
        for (w, &word) in v.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                counts[w * 64 + b] += 1;
                bits &= bits - 1;
            }
        }
    }
    let m = votes.len() as u32;
    let mut out = BinaryVector::zeros(len);
    for (i, &c) in counts.iter().enumerate() {
        let bit = match (2 * c).cmp(&m) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.gen(),
        };
        if bit {
            out.set(i, true);
        }
    }
    out
}

/// Fresh labels of length `n`, independent of every server's hidden labels.
pub fn fresh_labels(n: usize, seed: u64) -> BinaryVector {
    BinaryVector::random(n, &mut seed::rng(seed::derive(seed, "fresh-labels")))
}

/// Submits `i` uniform-random predictors, keeps those reported above 1/2,
/// and evaluates their majority vote on the holdout and on fresh labels.
pub fn boosting_attack(server: &mut HoldoutServer, i: u64, seed: u64) -> Result<AttackReport> {
    if i < 1 {
        return Err(Error::InvalidArgument("attack needs at least one query".into()));
    }
    let n = server.n();
    let mut rng = seed::rng(seed::derive(seed, "attack-queries"));
    let mut collected = Vec::new();
    for _ in 0..i {
        let guess = BinaryVector::random(n, &mut rng);
        if server.query(&guess)? > 0.5 {
            collected.push(guess);
        }
    }
    let mut vote_rng = seed::rng(seed::derive(seed, "attack-vote"));
    let final_predictor = majority_vote(&collected, n, &mut vote_rng);
    let fresh = fresh_labels(n, seed);
    Ok(AttackReport {
        i,
        reported_accuracy: server.empirical_accuracy(&final_predictor)?,
        true_accuracy: final_predictor.accuracy(&fresh),
        collected: collected.len(),
        bound_value: reuse_bound(n as u64, i)?,
    })
}

/// One attack trial's outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub mechanism: &'static str,
    pub report: AttackReport,
}

/// Runs `trials` independent attacks with `i` queries each against fresh
/// servers. Trial `t` uses the same hidden labels and attack stream for
/// every mechanism, so runs with different mechanisms are paired.
pub fn simulate_trials(
    n: usize,
    i: u64,
    mechanism: Mechanism,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut server = new_holdout(n, mechanism, seed::derive_indexed(seed, "trial-holdout", t))?;
            let report = boosting_attack(&mut server, i, seed::derive_indexed(seed, "trial-attack", t))?;
            Ok(TrialRecord {
                trial: t,
                mechanism: mechanism.name(),
                report,
            })
        })
        .collect()
}
