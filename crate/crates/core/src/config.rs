//! Run-wide settings shared by the front ends.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Precision, DEFAULT_DEGREE};

/// Environment variable that overrides `worker_count`.
pub const WORKERS_ENV: &str = "SIEGEL_WORKERS";

/// Encoding of tabular outputs (grids, boundary curves). Single reports are
/// always JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub precision_mode: Precision,
    pub default_degree: usize,
    pub default_depth: u32,
    pub output_format: OutputFormat,
    pub seed: u64,
    /// 0 lets the thread pool pick.
    pub worker_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_mode: Precision::Double,
            default_degree: DEFAULT_DEGREE,
            default_depth: crate::radius::DEFAULT_DEPTH,
            output_format: OutputFormat::Csv,
            seed: 0,
            worker_count: 0,
        }
    }
}

impl RunConfig {
    /// JSON file; missing fields keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Precondition(format!("bad config: {e}")))
    }

    /// Applies the worker-count environment override, if set.
    pub fn with_env(mut self, value: Option<&str>) -> Result<Self> {
        if let Some(v) = value {
            self.worker_count = v
                .trim()
                .parse()
                .map_err(|_| Error::Precondition(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")))?;
        }
        Ok(self)
    }

    /// Loads the optional file, then the environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.with_env(std::env::var(WORKERS_ENV).ok().as_deref())
    }

    /// Thread pool sized by `worker_count`. Parallel sections collect
    /// results by index, so output does not depend on the pool size.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.worker_count)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot build thread pool: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_json(r#"{"default_depth": 14, "precision_mode": "extended"}"#).unwrap();
        assert_eq!(c.default_depth, 14);
        assert_eq!(c.precision_mode, Precision::Extended);
        assert_eq!(c.default_degree, DEFAULT_DEGREE);
        assert!(RunConfig::from_json(r#"{"depth": 3}"#).is_err());
    }

    #[test]
    fn env_overrides_workers_only() {
        let c = RunConfig::default().with_env(Some("3")).unwrap();
        assert_eq!(c.worker_count, 3);
        assert!(RunConfig::default().with_env(Some("many")).is_err());
        assert_eq!(RunConfig::default().with_env(None).unwrap(), RunConfig::default());
    }

    #[test]
    fn grid_is_independent_of_pool_size() {
        use crate::families::FamilySpec;
        use crate::linearize::{yoccoz_grid, LinearizeOptions, YoccozEvaluator};
        let ev = YoccozEvaluator::new(&FamilySpec::exp(), LinearizeOptions::default()).unwrap();
        let run = |n: usize| {
            let cfg = RunConfig { worker_count: n, ..Default::default() };
            cfg.thread_pool().unwrap().install(|| yoccoz_grid(&ev, 0.1, 0.9, 6).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.u.to_bits(), y.u.to_bits());
        }
    }
}
