//! Auditing toolkit for multi-task benchmark leaderboards.
//!
//! The crate is organised around a models × tasks [`ScoreMatrix`]:
//!
//! - [`scorebank`] loads, validates, orients and normalizes score matrices.
//! - [`aggregate`] turns a task subset into per-model aggregate scores or rankings.
//! - [`rankstats`] compares rankings: Kendall tau-b, Top-k extraction, subset audits.
//! - [`significance`] holds pairwise model-comparison tests.
//! - [`reuse`] simulates adaptive reuse of a holdout set.
//!
//! [`fixtures`] bundles the Long Range Arena score table.

#![forbid(unsafe_code)]

pub mod aggregate;
pub mod error;
pub mod fixtures;
pub mod rankstats;
pub mod reuse;
pub mod scorebank;
pub mod seed;
pub mod significance;

pub use aggregate::{AggregateResult, AggregationSpec, Method};
pub use error::{Error, ErrorKind, Result};
pub use rankstats::{Ranking, SubsetAuditResult, TopK};
pub use scorebank::{Direction, MetricSpec, NormalizedMatrix, ScoreMatrix};
