//! `--config` file schema.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lbaudit::{AggregationSpec, Error, Method};
use serde::Deserialize;

/// Audit configuration. Every field is optional; command-line flags win over
/// file values. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub matrix_path: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
    pub aggregation: Option<AggregationSpec>,
    pub subset_sizes: Option<Vec<usize>>,
    pub ks: Option<Vec<usize>>,
    pub output_dir: Option<PathBuf>,
    pub sampling_budget: Option<u64>,
    pub seed: Option<u64>,
}

impl AuditConfig {
    /// Parses a config file and returns it with its raw bytes (for hashing).
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(Error::from)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: AuditConfig = serde_json::from_slice(&bytes)
            .map_err(Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.matrix_path, &mut cfg.metrics_path, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok((cfg, bytes))
    }

    /// Checks ranges that do not depend on the matrix.
    pub fn validate(&self) -> lbaudit::Result<()> {
        if let Some(spec) = &self.aggregation {
            spec.validate()?;
        }
        if let Some(ks) = &self.ks {
            if ks.contains(&0) {
                return Err(Error::Config("ks must be >= 1".into()));
            }
        }
        if self.sampling_budget == Some(0) {
            return Err(Error::Config("sampling_budget must be >= 1".into()));
        }
        Ok(())
    }
}

/// Resolved audit parameters.
#[derive(Debug, Clone)]
pub struct AuditParams {
    pub spec: AggregationSpec,
    pub sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub budget: u64,
}

impl AuditParams {
    /// Defaults: arithmetic mean, every size 1..=T, k = 1..=3, budget 10^6.
    pub fn resolve(cfg: &AuditConfig, n_tasks: usize, n_models: usize) -> lbaudit::Result<Self> {
        let spec = cfg
            .aggregation
            .clone()
            .unwrap_or_else(|| AggregationSpec::new(Method::ArithmeticMean));
        let sizes = cfg.subset_sizes.clone().unwrap_or_else(|| (1..=n_tasks).collect());
        if let Some(&bad) = sizes.iter().find(|&&s| s < 1 || s > n_tasks) {
            return Err(Error::Config(format!("subset size {bad} outside [1, {n_tasks}]")));
        }
        let ks = cfg.ks.clone().unwrap_or_else(|| (1..=3.min(n_models)).collect());
        let params = Self {
            spec,
            sizes,
            ks,
            budget: cfg.sampling_budget.unwrap_or(1_000_000),
        };
        cfg.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg: AuditConfig = serde_json::from_str(
            r#"{"matrix_path": "m.csv", "aggregation": {"method": "median"},
                "subset_sizes": [1, 2], "ks": [1], "sampling_budget": 10, "seed": 3}"#,
        )
        .unwrap();
        let p = AuditParams::resolve(&cfg, 4, 5).unwrap();
        assert_eq!(p.spec.method, Method::Median);
        assert_eq!((p.sizes, p.ks, p.budget), (vec![1, 2], vec![1], 10));
    }

    #[test]
    fn rejects_out_of_range_values() {
        let cfg = AuditConfig {
            subset_sizes: Some(vec![5]),
            ..Default::default()
        };
        assert!(AuditParams::resolve(&cfg, 4, 5).is_err());
        let cfg = AuditConfig {
            ks: Some(vec![0]),
            ..Default::default()
        };
        assert!(AuditParams::resolve(&cfg, 4, 5).is_err());
        assert!(serde_json::from_str::<AuditConfig>(r#"{"typo": 1}"#).is_err());
    }

    #[test]
    fn defaults_cover_every_size() {
        let p = AuditParams::resolve(&AuditConfig::default(), 3, 2).unwrap();
        assert_eq!(p.sizes, vec![1, 2, 3]);
        assert_eq!(p.ks, vec![1, 2]);
    }
}
