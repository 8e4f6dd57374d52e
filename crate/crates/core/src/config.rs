//! Run configuration (file plus flag layering) and logging setup.
//!
//! Every tunable constant the algorithms need but the theory leaves open
//! lives here, so a report can embed the exact values it ran with.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::rng::RNG_ALGORITHM;
use crate::robust::TGrid;
use crate::stable::MemoryMode;

/// Relative tolerances for comparing reproduced values with reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableTolerances {
    /// Threshold-graph cost.
    pub deterministic_cost: f64,
    /// Best k-means++ seeding cost.
    pub seeding_cost: f64,
    /// Best k-means++ followed by Lloyd.
    pub seeded_lloyd_cost: f64,
    pub eps_summary: f64,
    pub separation_ratio: f64,
    /// Lowest acceptable recovery score.
    pub recovery_floor: f64,
}

impl Default for TableTolerances {
    fn default() -> Self {
        Self {
            deterministic_cost: 0.01,
            seeding_cost: 0.05,
            seeded_lloyd_cost: 0.02,
            eps_summary: 0.15,
            separation_ratio: 0.25,
            recovery_floor: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub lloyd_tol: f64,
    pub lloyd_max_iter: usize,
    pub sweep_memory_mode: MemoryMode,
    pub t_grid_policy: TGrid,
    pub perceptron_budget: usize,
    pub dedup_cosine: f64,
    pub rng_algorithm: String,
    /// Worker threads; 0 uses every core.
    pub thread_width: usize,
    pub table_tolerances: TableTolerances,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            lloyd_tol: DEFAULT_TOL,
            lloyd_max_iter: DEFAULT_MAX_ITER,
            sweep_memory_mode: MemoryMode::Auto,
            t_grid_policy: TGrid::default(),
            perceptron_budget: 3,
            dedup_cosine: 1.0 - 1e-12,
            rng_algorithm: RNG_ALGORITHM.into(),
            thread_width: 0,
            table_tolerances: TableTolerances::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the lower layer in place.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub lloyd_tol: Option<f64>,
    pub lloyd_max_iter: Option<usize>,
    pub sweep_memory_mode: Option<MemoryMode>,
    pub perceptron_budget: Option<usize>,
    pub thread_width: Option<usize>,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let t = &self.table_tolerances;
        let positive = [
            ("lloyd_tol", self.lloyd_tol),
            ("dedup_cosine", self.dedup_cosine),
            ("table_tolerances.deterministic_cost", t.deterministic_cost),
            ("table_tolerances.seeding_cost", t.seeding_cost),
            ("table_tolerances.seeded_lloyd_cost", t.seeded_lloyd_cost),
            ("table_tolerances.eps_summary", t.eps_summary),
            ("table_tolerances.separation_ratio", t.separation_ratio),
            ("table_tolerances.recovery_floor", t.recovery_floor),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        if self.dedup_cosine > 1.0 {
            return Err(Error::InvalidParameter("dedup_cosine must not exceed 1".into()));
        }
        if self.lloyd_max_iter == 0 || self.perceptron_budget == 0 {
            return Err(Error::InvalidParameter("lloyd_max_iter and perceptron_budget must be at least 1".into()));
        }
        if self.rng_algorithm != RNG_ALGORITHM {
            return Err(Error::InvalidParameter(format!(
                "unsupported rng_algorithm '{}' (only '{RNG_ALGORITHM}')",
                self.rng_algorithm
            )));
        }
        if let MemoryMode::ExternalSort { chunk_edges: 0 } = self.sweep_memory_mode {
            return Err(Error::InvalidParameter("chunk_edges must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::ConfigParse { line, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(v) = o.lloyd_tol {
            self.lloyd_tol = v;
        }
        if let Some(v) = o.lloyd_max_iter {
            self.lloyd_max_iter = v;
        }
        if let Some(v) = o.sweep_memory_mode {
            self.sweep_memory_mode = v;
        }
        if let Some(v) = o.perceptron_budget {
            self.perceptron_budget = v;
        }
        if let Some(v) = o.thread_width {
            self.thread_width = v;
        }
    }
}

/// Defaults, then the file (if any), then the overrides.
pub fn load_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => Config::from_toml_str(&std::fs::read_to_string(p)?)?,
        None => Config::default(),
    };
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}

/// Installs a stderr subscriber. `RUST_LOG` wins over `default_level`.
/// Safe to call more than once.
pub fn init_logging(default_level: &str) {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level));
    let _ =
        tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).with_target(false).try_init();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file_or_flags() {
        let c = load_config(None, &ConfigOverrides::default()).unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.lloyd_tol, 1e-9);
        assert_eq!(c.lloyd_max_iter, 300);
    }

    #[test]
    fn flag_beats_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "lloyd_max_iter = 50\nperceptron_budget = 2\n").unwrap();
        let o = ConfigOverrides { lloyd_max_iter: Some(7), ..Default::default() };
        let c = load_config(Some(&path), &o).unwrap();
        assert_eq!(c.lloyd_max_iter, 7);
        assert_eq!(c.perceptron_budget, 2);
    }

    #[test]
    fn malformed_file_reports_line() {
        let err = Config::from_toml_str("lloyd_tol = 1e-9\n\nlloyd_max_iter = \"many\"\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }), "{err:?}");
        let err = Config::from_toml_str("lloyd_tol = 1e-9\nbogus_key = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn round_trip() {
        let mut c = Config {
            sweep_memory_mode: MemoryMode::ExternalSort { chunk_edges: 1 << 20 },
            t_grid_policy: TGrid::Geometric { points: 32 },
            ..Config::default()
        };
        c.table_tolerances.eps_summary = 0.2;
        let text = c.to_toml_string();
        assert_eq!(Config::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        assert!(Config::from_toml_str("[table_tolerances]\neps_summary = 0.0\n").is_err());
        assert!(Config::from_toml_str("rng_algorithm = \"mt19937\"\n").is_err());
    }
}
