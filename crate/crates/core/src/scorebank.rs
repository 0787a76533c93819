//! Score matrices: data model, ingestion, validation and normalization.
//!
//! A [`ScoreMatrix`] is a dense models × tasks table of optional scores plus a
//! [`MetricSpec`] per task. Missing cells are stored explicitly; any
//! aggregation that touches one fails instead of imputing a value.
//!
//! Two on-disk formats are supported:
//!
//! - CSV: header `model,<task_1>,...,<task_T>`, one row per model, blank cell
//!   means missing. Metric metadata comes from a sidecar JSON document
//!   (`{"tasks": {"<task>": {"direction": "higher", ...}}}`).
//! - JSON: `{"models": [...], "tasks": [...], "scores": [[...]], "metrics": {...}}`
//!   with `null` for missing cells and `metrics` keyed by task id.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Higher,
    Lower,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Higher => Direction::Lower,
            Direction::Lower => Direction::Higher,
        }
    }
}

fn default_weight() -> f64 {
    1.0
}

fn is_default_weight(w: &f64) -> bool {
    *w == 1.0
}

/// Per-task metric metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(default)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default = "default_weight", skip_serializing_if = "is_default_weight")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_baseline: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_reference: Option<f64>,
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            direction: Direction::Higher,
            group: None,
            weight: 1.0,
            random_baseline: None,
            human_reference: None,
        }
    }
}

impl MetricSpec {
    pub fn lower_better() -> Self {
        Self {
            direction: Direction::Lower,
            ..Self::default()
        }
    }

    pub fn validate(&self, task: &str) -> Result<()> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::Config(format!(
                "task {task:?}: weight must be a positive finite number, got {}",
                self.weight
            )));
        }
        for (name, v) in [
            ("random_baseline", self.random_baseline),
            ("human_reference", self.human_reference),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Config(format!("task {task:?}: {name} must be finite")));
                }
            }
        }
        if let (Some(r), Some(h)) = (self.random_baseline, self.human_reference) {
            if r == h {
                return Err(Error::Config(format!(
                    "task {task:?}: random_baseline equals human_reference ({r})"
                )));
            }
        }
        Ok(())
    }
}

/// The sidecar metric configuration accompanying a CSV score matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default)]
    pub tasks: BTreeMap<String, MetricSpec>,
}

pub fn load_metrics<R: Read>(reader: R) -> Result<MetricsConfig> {
    Ok(serde_json::from_reader(reader)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown matrix format {other:?}"))),
        }
    }
}

/// Models × tasks table of optional scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    model_ids: Vec<String>,
    task_ids: Vec<String>,
    /// Row-major, `model_ids.len() * task_ids.len()` cells.
    scores: Vec<Option<f64>>,
    /// Aligned with `task_ids`.
    metrics: Vec<MetricSpec>,
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Schema(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(())
}

impl ScoreMatrix {
    /// Builds a validated matrix. Tasks absent from `metrics` get the default
    /// (higher-better, weight 1) spec; metrics naming unknown tasks are rejected.
    pub fn new(
        model_ids: Vec<String>,
        task_ids: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
        metrics: BTreeMap<String, MetricSpec>,
    ) -> Result<Self> {
        check_unique(&model_ids, "model")?;
        check_unique(&task_ids, "task")?;
        if rows.len() != model_ids.len() {
            return Err(Error::Schema(format!(
                "{} score rows for {} models",
                rows.len(),
                model_ids.len()
            )));
        }
        let mut scores = Vec::with_capacity(model_ids.len() * task_ids.len());
        for (model, row) in model_ids.iter().zip(rows) {
            if row.len() != task_ids.len() {
                return Err(Error::Schema(format!(
                    "model {model:?} has {} scores for {} tasks",
                    row.len(),
                    task_ids.len()
                )));
            }
            for (task, cell) in task_ids.iter().zip(&row) {
                if let Some(v) = cell {
                    if !v.is_finite() {
                        return Err(Error::Schema(format!(
                            "non-finite score {v} for model {model:?} on task {task:?}"
                        )));
                    }
                }
            }
            scores.extend(row);
        }
        let mut matrix = Self {
            metrics: vec![MetricSpec::default(); task_ids.len()],
            model_ids,
            task_ids,
            scores,
        };
        matrix.apply_metrics(metrics)?;
        Ok(matrix)
    }

    /// Complete matrix with default metrics; convenient for synthetic data.
    pub fn dense<M, T>(model_ids: &[M], task_ids: &[T], rows: Vec<Vec<f64>>) -> Result<Self>
    where
        M: AsRef<str>,
        T: AsRef<str>,
    {
        Self::new(
            model_ids.iter().map(|s| s.as_ref().to_owned()).collect(),
            task_ids.iter().map(|s| s.as_ref().to_owned()).collect(),
            rows.into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
            BTreeMap::new(),
        )
    }

    fn apply_metrics(&mut self, metrics: BTreeMap<String, MetricSpec>) -> Result<()> {
        for (task, spec) in metrics {
            let idx = self.task_index(&task).ok_or_else(|| {
                Error::Schema(format!("metrics config names unknown task {task:?}"))
            })?;
            spec.validate(&task)?;
            self.metrics[idx] = spec;
        }
        Ok(())
    }

    pub fn with_metrics(mut self, config: MetricsConfig) -> Result<Self> {
        self.apply_metrics(config.tasks)?;
        Ok(self)
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.task_ids.len()
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.model_ids.iter().position(|m| m == id)
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.task_ids.iter().position(|t| t == id)
    }

    /// Resolves task names to column indices.
    pub fn task_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.task_index(n.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown task {:?}", n.as_ref())))
            })
            .collect()
    }

    pub fn metric(&self, task: usize) -> &MetricSpec {
        &self.metrics[task]
    }

    pub fn metrics(&self) -> impl Iterator<Item = (&str, &MetricSpec)> {
        self.task_ids.iter().map(String::as_str).zip(&self.metrics)
    }

    pub fn score(&self, model: usize, task: usize) -> Option<f64> {
        self.scores[model * self.task_ids.len() + task]
    }

    pub fn missing_count(&self) -> usize {
        self.scores.iter().filter(|c| c.is_none()).count()
    }

    /// Score of `model` on `task`, or [`Error::MissingScore`].
    pub fn require(&self, model: usize, task: usize) -> Result<f64> {
        self.score(model, task).ok_or_else(|| Error::MissingScore {
            model: self.model_ids[model].clone(),
            task: self.task_ids[task].clone(),
        })
    }

    /// Complete column for `task`; fails on the first missing cell.
    pub fn require_column(&self, task: usize) -> Result<Vec<f64>> {
        (0..self.n_models()).map(|m| self.require(m, task)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        self.scores.chunks(self.task_ids.len().max(1)).take(self.model_ids.len())
    }

    fn map_columns(&self, mut f: impl FnMut(usize, &MetricSpec, f64) -> f64) -> Vec<Option<f64>> {
        let t = self.n_tasks();
        self.scores
            .iter()
            .enumerate()
            .map(|(i, cell)| cell.map(|v| f(i % t, &self.metrics[i % t], v)))
            .collect()
    }

    pub fn metrics_config(&self) -> MetricsConfig {
        MetricsConfig {
            tasks: self
                .metrics()
                .map(|(t, m)| (t.to_owned(), m.clone()))
                .collect(),
        }
    }
}

/// A score matrix whose every task is higher-better.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    inner: ScoreMatrix,
    human_normalized: bool,
}

impl NormalizedMatrix {
    pub fn is_human_normalized(&self) -> bool {
        self.human_normalized
    }

    pub fn into_inner(self) -> ScoreMatrix {
        self.inner
    }
}

impl Deref for NormalizedMatrix {
    type Target = ScoreMatrix;

    fn deref(&self) -> &ScoreMatrix {
        &self.inner
    }
}

/// Negates lower-better columns (and their baselines) and marks every task
/// higher-better.
pub fn orient(m: &ScoreMatrix) -> NormalizedMatrix {
    let scores = m.map_columns(|_, spec, v| match spec.direction {
        Direction::Higher => v,
        Direction::Lower => -v,
    });
    let metrics = m
        .metrics
        .iter()
        .map(|spec| match spec.direction {
            Direction::Higher => spec.clone(),
            Direction::Lower => MetricSpec {
                direction: Direction::Higher,
                random_baseline: spec.random_baseline.map(|v| -v),
                human_reference: spec.human_reference.map(|v| -v),
                ..spec.clone()
            },
        })
        .collect();
    NormalizedMatrix {
        inner: ScoreMatrix {
            model_ids: m.model_ids.clone(),
            task_ids: m.task_ids.clone(),
            scores,
            metrics,
        },
        human_normalized: false,
    }
}

/// Maps every score to `(s - random) / (human - random)`.
///
/// The map is applied after orientation; negating score and both anchors
/// leaves the ratio unchanged, so the result is the same either way.
pub fn human_normalize(m: &ScoreMatrix) -> Result<NormalizedMatrix> {
    for (task, spec) in m.metrics() {
        if spec.random_baseline.is_none() || spec.human_reference.is_none() {
            return Err(Error::Config(format!(
                "task {task:?} lacks random_baseline and/or human_reference"
            )));
        }
    }
    let mut oriented = orient(m);
    // orient() negated the anchors of lower-better tasks together with the scores.
    let anchors: Vec<(f64, f64)> = oriented
        .inner
        .metrics
        .iter()
        .map(|s| (s.random_baseline.unwrap(), s.human_reference.unwrap()))
        .collect();
    let scores = oriented
        .inner
        .map_columns(|t, _, v| (v - anchors[t].0) / (anchors[t].1 - anchors[t].0));
    oriented.inner.scores = scores;
    for spec in &mut oriented.inner.metrics {
        spec.random_baseline = Some(0.0);
        spec.human_reference = Some(1.0);
    }
    oriented.human_normalized = true;
    Ok(oriented)
}

fn parse_cell(raw: &str, row: usize, column: usize) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            row,
            column,
            value: raw.to_owned(),
        }),
    }
}

/// Reads a CSV matrix. Row and column coordinates in errors are 1-based and
/// count the header line as row 1 and the model column as column 1.
fn load_csv<R: Read>(reader: R) -> Result<ScoreMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Schema("empty CSV: missing header".into()))??;
    let mut cols = header.iter().map(str::trim);
    match cols.next() {
        Some(first) if first.eq_ignore_ascii_case("model") => {}
        other => {
            return Err(Error::Schema(format!(
                "first header cell must be \"model\", found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let task_ids: Vec<String> = cols.map(str::to_owned).collect();
    if task_ids.is_empty() {
        return Err(Error::Schema("CSV header names no tasks".into()));
    }
    let mut model_ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if rec.len() != task_ids.len() + 1 {
            return Err(Error::Schema(format!(
                "row {line} has {} cells, header has {}",
                rec.len(),
                task_ids.len() + 1
            )));
        }
        model_ids.push(rec[0].trim().to_owned());
        let row = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, cell)| parse_cell(cell, line, c + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ScoreMatrix::new(model_ids, task_ids, rows, BTreeMap::new())
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    models: Vec<String>,
    tasks: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metrics: BTreeMap<String, MetricSpec>,
}

pub fn load_matrix<R: Read>(reader: R, format: Format) -> Result<ScoreMatrix> {
    match format {
        Format::Csv => load_csv(reader),
        Format::Json => {
            let doc: JsonMatrix = serde_json::from_reader(reader)?;
            ScoreMatrix::new(doc.models, doc.tasks, doc.scores, doc.metrics)
        }
    }
}

/// Writes `m` in `format`. CSV output carries scores only; pair it with
/// [`save_metrics`] to keep the metric metadata.
pub fn save_matrix<W: Write>(m: &ScoreMatrix, writer: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(std::iter::once("model").chain(m.task_ids.iter().map(String::as_str)))?;
            for (model, row) in m.model_ids.iter().zip(m.rows()) {
                let cells = row
                    .iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default());
                w.write_record(std::iter::once(model.clone()).chain(cells))?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => {
            let doc = JsonMatrix {
                models: m.model_ids.clone(),
                tasks: m.task_ids.clone(),
                scores: m.rows().map(<[_]>::to_vec).collect(),
                metrics: m.metrics_config().tasks,
            };
            serde_json::to_writer_pretty(writer, &doc)?;
            Ok(())
        }
    }
}

pub fn save_metrics<W: Write>(m: &ScoreMatrix, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &m.metrics_config())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(s: &str) -> Result<ScoreMatrix> {
        load_matrix(s.as_bytes(), Format::Csv)
    }

    #[test]
    fn blank_cell_is_missing() {
        let m = csv("model,t1,t2\na,1,2\nb,,4\nc,5,6\n").unwrap();
        assert_eq!((m.n_models(), m.n_tasks()), (3, 2));
        assert_eq!(m.missing_count(), 1);
        assert_eq!(m.score(1, 0), None);
        assert_eq!(m.score(2, 1), Some(6.0));
        assert!(matches!(m.require(1, 0), Err(Error::MissingScore { .. })));
    }

    #[test]
    fn duplicate_header_is_schema_error() {
        assert!(matches!(csv("model,t1,t1\na,1,2\n"), Err(Error::Schema(_))));
        assert!(matches!(csv("model,t1\na,1\na,2\n"), Err(Error::Schema(_))));
    }

    #[test]
    fn non_numeric_cell_reports_coordinates() {
        match csv("model,t1,t2\na,1,2\nb,3,oops\n") {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column, value.as_str()), (3, 3, "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(csv("model,t1\na,NaN\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn ragged_row_is_schema_error() {
        assert!(matches!(csv("model,t1,t2\na,1\n"), Err(Error::Schema(_))));
        assert!(matches!(csv("name,t1\na,1\n"), Err(Error::Schema(_))));
    }

    #[test]
    fn json_dimension_mismatch() {
        let doc = r#"{"models":["a","b"],"tasks":["t"],"scores":[[1.0]]}"#;
        assert!(matches!(load_matrix(doc.as_bytes(), Format::Json), Err(Error::Schema(_))));
        let doc = r#"{"models":["a"],"tasks":["t"],"scores":[[1.0, 2.0]]}"#;
        assert!(matches!(load_matrix(doc.as_bytes(), Format::Json), Err(Error::Schema(_))));
    }

    #[test]
    fn metric_validation() {
        let m = csv("model,t1\na,1\n").unwrap();
        let bad_weight: MetricsConfig =
            serde_json::from_str(r#"{"tasks":{"t1":{"direction":"higher","weight":0}}}"#).unwrap();
        assert!(matches!(m.clone().with_metrics(bad_weight), Err(Error::Config(_))));
        let equal_anchors: MetricsConfig = serde_json::from_str(
            r#"{"tasks":{"t1":{"direction":"lower","random_baseline":2,"human_reference":2}}}"#,
        )
        .unwrap();
        assert!(matches!(m.clone().with_metrics(equal_anchors), Err(Error::Config(_))));
        let unknown: MetricsConfig =
            serde_json::from_str(r#"{"tasks":{"zz":{"direction":"lower"}}}"#).unwrap();
        assert!(matches!(m.with_metrics(unknown), Err(Error::Schema(_))));
    }

    fn with_anchors(values: &[f64], r: f64, h: f64, dir: Direction) -> ScoreMatrix {
        let models: Vec<String> = (0..values.len()).map(|i| format!("m{i}")).collect();
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "t".to_owned(),
            MetricSpec {
                direction: dir,
                random_baseline: Some(r),
                human_reference: Some(h),
                ..MetricSpec::default()
            },
        );
        ScoreMatrix::new(
            models,
            vec!["t".into()],
            values.iter().map(|&v| vec![Some(v)]).collect(),
            metrics,
        )
        .unwrap()
    }

    #[test]
    fn human_normalization_anchors() {
        let m = with_anchors(&[0.0, 200.0, 50.0], 0.0, 200.0, Direction::Higher);
        let n = human_normalize(&m).unwrap();
        assert!(n.is_human_normalized());
        assert_eq!(n.score(0, 0), Some(0.0));
        assert_eq!(n.score(1, 0), Some(1.0));
        assert_eq!(n.score(2, 0), Some(0.25));
    }

    #[test]
    fn human_normalization_lower_better() {
        // Error rate: random guessing 50, humans 10.
        let m = with_anchors(&[50.0, 10.0, 30.0], 50.0, 10.0, Direction::Lower);
        let n = human_normalize(&m).unwrap();
        assert_eq!(n.metric(0).direction, Direction::Higher);
        assert_eq!(n.score(0, 0), Some(0.0));
        assert_eq!(n.score(1, 0), Some(1.0));
        assert_eq!(n.score(2, 0), Some(0.5));
    }

    #[test]
    fn human_normalization_requires_anchors() {
        let m = csv("model,t1,t2\na,1,2\n").unwrap();
        match human_normalize(&m) {
            Err(Error::Config(msg)) => assert!(msg.contains("t1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orient_negates_lower_columns_only() {
        let m = ScoreMatrix::dense(&["a", "b", "c"], &["hi", "lo"], vec![
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ])
        .unwrap();
        let mut cfg = MetricsConfig::default();
        cfg.tasks.insert("lo".into(), MetricSpec::lower_better());
        let m = m.with_metrics(cfg).unwrap();
        let o = orient(&m);
        assert_eq!(o.require_column(0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(o.require_column(1).unwrap(), vec![-1.0, -2.0, -3.0]);
        assert!(o.metrics().all(|(_, s)| s.direction == Direction::Higher));
    }
}
