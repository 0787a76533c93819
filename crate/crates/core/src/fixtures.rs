//! Bundled data.
//!
//! The Long Range Arena per-task accuracies of eleven efficient-Transformer
//! variants (Path-X omitted, every model fails it). Columns are Text,
//! Retrieval, ListOps, Image, Pathfinder, i.e. tasks t1..t5 of the subset
//! tables.

use serde::Deserialize;

use crate::error::Result;
use crate::scorebank::{load_matrix, load_metrics, Format, ScoreMatrix};

pub const LRA_CSV: &str = include_str!("../fixtures/lra.csv");
pub const LRA_METRICS_JSON: &str = include_str!("../fixtures/lra_metrics.json");
pub const LRA_TOP3_JSON: &str = include_str!("../fixtures/lra_top3.json");

pub fn lra() -> Result<ScoreMatrix> {
    load_matrix(LRA_CSV.as_bytes(), Format::Csv)?.with_metrics(load_metrics(LRA_METRICS_JSON.as_bytes())?)
}

/// One published Top-3 row: 1-based task numbers and model names in order.
#[derive(Debug, Clone, Deserialize)]
pub struct ExpectedTop3 {
    pub tasks: Vec<usize>,
    pub top3: Vec<String>,
}

pub fn lra_expected_top3() -> Result<Vec<ExpectedTop3>> {
    Ok(serde_json::from_str(LRA_TOP3_JSON)?)
}
