//! Run orchestration behind the command-line tool: algorithm dispatch,
//! reports and their file formats.
//!
//! Reports are deterministic functions of the command, the config and the
//! seed. Wall times go to a separate [`Timings`] value so that two runs of
//! the same command produce byte-identical report files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::info;

use crate::config::Config;
use crate::datasets::{self, DatasetSpec};
use crate::error::{Error, Result};
use crate::instance::{Clustering, Instance, Matrix};
use crate::kmeans;
use crate::perceptron::{self, CandidateBudget, Cluster2Options};
use crate::rng;
use crate::robust::{self, RobustSearchOptions};
use crate::stability::{self, EpsSummary};
use crate::stable::{self, SweepOptions};
use crate::suites::SuiteReport;

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISSING_DATASET: i32 = 3;
pub const EXIT_PROPERTY_FAILURE: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MissingDataset(_) => EXIT_MISSING_DATASET,
        Error::Io(_) | Error::Json(_) => EXIT_OTHER,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Threshold-graph sweep.
    Stable,
    /// Threshold-graph sweep, then Lloyd from its seeds.
    StableLloyd,
    /// Degree-pruned threshold graph.
    Robust,
    /// Lloyd from `k` distinct uniformly drawn points, best of `trials`.
    Lloyd,
    /// k-means++ seeding only, best of `trials`.
    Kmeanspp,
    /// k-means++ then Lloyd, best of `trials`.
    KmeansppLloyd,
    /// Perceptron search over lifted instances (`k = 2`).
    TwoMeans,
    /// Lloyd started from the label centroids.
    GroundTruth,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Stable,
        Algorithm::StableLloyd,
        Algorithm::Robust,
        Algorithm::Lloyd,
        Algorithm::Kmeanspp,
        Algorithm::KmeansppLloyd,
        Algorithm::TwoMeans,
        Algorithm::GroundTruth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Stable => "stable",
            Algorithm::StableLloyd => "stable_lloyd",
            Algorithm::Robust => "robust",
            Algorithm::Lloyd => "lloyd",
            Algorithm::Kmeanspp => "kmeanspp",
            Algorithm::KmeansppLloyd => "kmeanspp_lloyd",
            Algorithm::TwoMeans => "two_means",
            Algorithm::GroundTruth => "ground_truth",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::Lloyd | Algorithm::Kmeanspp | Algorithm::KmeansppLloyd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub k: usize,
    pub seed: u64,
    pub trials: usize,
    /// Fixed threshold for `robust`; with `t` it skips the search.
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub max_pairs: Option<usize>,
}

impl RunOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, trials: 1, r: None, t: None, max_pairs: None }
    }
}

#[derive(Debug, Clone)]
pub struct AlgoOutput {
    pub clustering: Clustering,
    /// One cost per trial, in trial order. Empty for deterministic algorithms.
    pub trial_costs: Vec<f64>,
    /// Algorithm-specific values such as the chosen threshold.
    pub params: BTreeMap<String, f64>,
}

pub fn run_algorithm(inst: &Instance, algo: Algorithm, opts: &RunOptions, cfg: &Config) -> Result<AlgoOutput> {
    let k = opts.k;
    if k == 0 || k > inst.n() {
        return Err(Error::KTooLarge { k, n: inst.n() });
    }
    if algo.is_randomized() && opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut params = BTreeMap::new();
    let clustering = match algo {
        Algorithm::Stable | Algorithm::StableLloyd => {
            let out = stable::cluster_with(inst, k, SweepOptions { memory: cfg.sweep_memory_mode })?;
            params.insert("threshold".into(), out.threshold);
            params.insert("evaluated".into(), out.evaluated as f64);
            if algo == Algorithm::Stable {
                out.clustering
            } else {
                kmeans::lloyd(inst, &out.seeds, cfg.lloyd_tol, cfg.lloyd_max_iter)?
            }
        }
        Algorithm::Robust => match (opts.r, opts.t) {
            (Some(r), Some(t)) => {
                params.insert("r".into(), r);
                params.insert("t".into(), t);
                robust::robust_cluster(inst, k, r, t)?
            }
            (None, None) => {
                let opts = RobustSearchOptions { t_grid: cfg.t_grid_policy, max_thresholds: None };
                let out = robust::robust_cluster_search_with(inst, k, opts)?;
                params.insert("r".into(), out.r);
                params.insert("t".into(), out.t);
                params.insert("evaluated".into(), out.evaluated as f64);
                out.clustering
            }
            _ => return Err(Error::InvalidParameter("give both r and t, or neither".into())),
        },
        Algorithm::TwoMeans => {
            if k != 2 {
                return Err(Error::InvalidParameter(format!("two_means needs k = 2, got {k}")));
            }
            let budget = CandidateBudget { max_multiset_size: cfg.perceptron_budget, dedup_cosine: cfg.dedup_cosine };
            let out = perceptron::cluster2_with(inst, Cluster2Options { budget, max_pairs: opts.max_pairs })?;
            params.insert("candidates_evaluated".into(), out.candidates_evaluated as f64);
            out.clustering
        }
        Algorithm::GroundTruth => datasets::ground_truth_lloyd(inst, cfg.lloyd_tol, cfg.lloyd_max_iter)?,
        Algorithm::Lloyd | Algorithm::Kmeanspp | Algorithm::KmeansppLloyd => {
            return best_of_trials(inst, algo, opts, cfg);
        }
    };
    Ok(AlgoOutput { clustering, trial_costs: Vec::new(), params })
}

/// Trial `i` draws from substream `i` of the seed; ties go to the lowest trial.
fn best_of_trials(inst: &Instance, algo: Algorithm, opts: &RunOptions, cfg: &Config) -> Result<AlgoOutput> {
    let k = opts.k;
    let runs: Vec<Clustering> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::substream(opts.seed, trial as u64);
            let centers = match algo {
                Algorithm::Lloyd => {
                    let picked = sample(&mut rng, inst.n(), k);
                    Matrix::from_rows(&picked.iter().map(|i| inst.point(i)).collect::<Vec<_>>())?
                }
                _ => kmeans::kmeanspp_with_rng(inst, k, &mut rng)?,
            };
            if algo == Algorithm::Kmeanspp {
                let assignment = kmeans::assign(inst, &centers)?;
                let cost = kmeans::cost(inst, &centers)?;
                Ok(Clustering { assignment, centers, cost, k, empty_clusters: Vec::new() })
            } else {
                kmeans::lloyd(inst, &centers, cfg.lloyd_tol, cfg.lloyd_max_iter)
            }
        })
        .collect::<Result<_>>()?;
    let trial_costs: Vec<f64> = runs.iter().map(|c| c.cost).collect();
    let best = (0..runs.len()).min_by(|&a, &b| trial_costs[a].total_cmp(&trial_costs[b])).expect("trials >= 1");
    let mut params = BTreeMap::new();
    params.insert("best_trial".into(), best as f64);
    let clustering = runs.into_iter().nth(best).expect("index in range");
    Ok(AlgoOutput { clustering, trial_costs, params })
}

/// A registered dataset name or a CSV path (label in the last column).
pub fn load_dataset(name_or_path: &str, normalize: bool) -> Result<Instance> {
    let (spec, path) = match datasets::find_spec(name_or_path) {
        Some(spec) => {
            let path = datasets::dataset_path(&spec, &datasets::data_dir());
            (spec, path)
        }
        None => {
            let path = PathBuf::from(name_or_path);
            (DatasetSpec::adhoc(&path), path)
        }
    };
    if !path.is_file() {
        return Err(Error::MissingDataset(vec![path.display().to_string()]));
    }
    let inst = datasets::load_csv(&path, &spec)?;
    Ok(if normalize { datasets::normalize_unit_range(&inst) } else { inst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trials: usize,
    pub cost: f64,
    /// Against Lloyd from the label centroids, when labels exist.
    pub recovery: Option<f64>,
    pub trial_costs: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    /// Relative to the report directory.
    pub assignment_file: Option<String>,
    /// Centers the cost was measured against; relative to the report directory.
    pub centers_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub eta: f64,
    pub eps: f64,
    /// `None` unless every cluster pair is defined, matching a blank table row.
    pub min: Option<f64>,
    pub avg: Option<f64>,
    pub max: Option<f64>,
    pub all_pairs_defined: bool,
    /// `rho / delta` per pair, `None` where the trimmed margin is not positive.
    pub per_pair: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub dataset: String,
    pub k: usize,
    pub reference_cost: f64,
    pub balance: f64,
    pub eps: EpsSummary,
    pub profiles: Vec<ProfileRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub config: Config,
    pub rows: Vec<RunRow>,
    pub stability: Vec<StabilityRow>,
    pub suites: Vec<SuiteReport>,
}

impl RunReport {
    pub fn new(command: Vec<String>, config: Config) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.into(),
            command,
            config,
            rows: Vec::new(),
            stability: Vec::new(),
            suites: Vec::new(),
        }
    }
}

/// Wall-clock milliseconds per labelled step, kept out of the report proper.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub steps: Vec<(String, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, label: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let label = label.into();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        info!(step = %label, ms, "done");
        self.steps.push((label, ms));
        out
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.steps.iter().find(|(l, _)| l == label).map(|(_, ms)| *ms)
    }
}

/// Runs one algorithm and builds its report row. The recovery column is
/// filled when `reference` is given.
pub fn cluster_row(
    inst: &Instance,
    algo: Algorithm,
    opts: &RunOptions,
    cfg: &Config,
    reference: Option<&Clustering>,
) -> Result<(RunRow, Clustering)> {
    let out = run_algorithm(inst, algo, opts, cfg)?;
    let recovery = reference.map(|r| datasets::recovery_score(&out.clustering, r)).transpose()?;
    let row = RunRow {
        dataset: inst.name().to_string(),
        algorithm: algo,
        k: opts.k,
        n: inst.n(),
        d: inst.d(),
        seed: opts.seed,
        trials: if algo.is_randomized() { opts.trials } else { 1 },
        cost: out.clustering.cost,
        recovery,
        trial_costs: out.trial_costs,
        params: out.params,
        assignment_file: None,
        centers_file: None,
    };
    Ok((row, out.clustering))
}

/// Reference clustering and its stability numbers for every `(eta, eps)`.
pub fn stability_row(inst: &Instance, etas: &[f64], epss: &[f64], cfg: &Config) -> Result<StabilityRow> {
    let reference = datasets::ground_truth_lloyd(inst, cfg.lloyd_tol, cfg.lloyd_max_iter)?;
    let eps = stability::eps_summary(&reference, inst)?;
    let mut profiles = Vec::new();
    for &eta in etas {
        for &e in epss {
            let prof = stability::separation_profile(&reference, inst, eta, e)?;
            let row = prof.row_summary();
            profiles.push(ProfileRow {
                eta,
                eps: e,
                min: row.map(|s| s.min),
                avg: row.map(|s| s.avg),
                max: row.map(|s| s.max),
                all_pairs_defined: prof.all_pairs_defined,
                per_pair: prof.per_pair.iter().map(|(key, p)| (key.clone(), p.rho_over_delta)).collect(),
            });
        }
    }
    Ok(StabilityRow {
        dataset: inst.name().to_string(),
        k: reference.k,
        reference_cost: reference.cost,
        balance: stability::balance(&reference)?,
        eps,
        profiles,
    })
}

/// Trimming fractions and cone parameters of the published separation table.
pub const TABLE_ETAS: [f64; 2] = [0.05, 0.1];
pub const TABLE_EPSS: [f64; 2] = [0.1, 0.01];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub seed: u64,
    pub seeding_trials: usize,
    pub lloyd_trials: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { seed: 0, seeding_trials: 1000, lloyd_trials: 100 }
    }
}

/// Every registered dataset, raw and normalized: the four cost columns, the
/// recovery of the sweep, and the stability numbers. Refuses to start when a
/// file is missing.
pub fn bench(report: &mut RunReport, timings: &mut Timings, opts: BenchOptions) -> Result<Vec<(String, Clustering)>> {
    let dir = datasets::data_dir();
    let missing = datasets::missing_files(&dir);
    if !missing.is_empty() {
        return Err(Error::MissingDataset(missing));
    }
    let cfg = report.config.clone();
    let mut assignments = Vec::new();
    for spec in datasets::registry() {
        for normalize in [false, true] {
            let inst = load_dataset(&spec.name, normalize)?;
            let name = inst.name().to_string();
            let k = inst.label_count();
            let reference = timings.time(format!("{name}/ground_truth"), || {
                datasets::ground_truth_lloyd(&inst, cfg.lloyd_tol, cfg.lloyd_max_iter)
            })?;
            let plan = [
                (Algorithm::Stable, 1),
                (Algorithm::Kmeanspp, opts.seeding_trials),
                (Algorithm::StableLloyd, 1),
                (Algorithm::KmeansppLloyd, opts.lloyd_trials),
            ];
            for (algo, trials) in plan {
                let run = RunOptions { trials, ..RunOptions::new(k, opts.seed) };
                let (row, c) = timings
                    .time(format!("{name}/{algo}"), || cluster_row(&inst, algo, &run, &cfg, Some(&reference)))?;
                report.rows.push(row);
                assignments.push((format!("{name}-{algo}"), c));
            }
            let st =
                timings.time(format!("{name}/stability"), || stability_row(&inst, &TABLE_ETAS, &TABLE_EPSS, &cfg))?;
            report.stability.push(st);
        }
    }
    Ok(assignments)
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_timings(path: &Path, timings: &Timings) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(timings)? + "\n")?;
    Ok(())
}

/// One `index,cluster` line per point after a header.
pub fn write_assignment(path: &Path, assignment: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "cluster"])?;
    for (i, c) in assignment.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per center, shortest round-trip float formatting.
pub fn write_centers(path: &Path, centers: &Matrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in centers.iter_rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_centers(path: &Path) -> Result<Matrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: row + 1,
                    column: col + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Matrix::from_rows(&rows)
}

/// Writes `<stem>-assignment.csv` and `<stem>-centers.csv` into `dir` and
/// records their names in `row`.
pub fn emit_clustering(dir: &Path, stem: &str, row: &mut RunRow, c: &Clustering) -> Result<()> {
    let assignment = format!("{stem}-assignment.csv");
    let centers = format!("{stem}-centers.csv");
    write_assignment(&dir.join(&assignment), &c.assignment)?;
    write_centers(&dir.join(&centers), &c.centers)?;
    row.assignment_file = Some(assignment);
    row.centers_file = Some(centers);
    Ok(())
}

pub fn read_assignment(path: &Path) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |col: usize| -> Result<usize> {
            rec.get(col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row: row + 2,
                column: col + 1,
                message: "expected a non-negative integer".into(),
            })
        };
        if parse(0)? != out.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: row + 2,
                column: 1,
                message: "indices must run 0, 1, 2, ...".into(),
            });
        }
        out.push(parse(1)?);
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Plain-text tables for the terminal.
pub fn render_text(report: &RunReport, timings: &Timings) -> String {
    let mut out = String::new();
    if !report.rows.is_empty() {
        out.push_str(&format!(
            "{:<22} {:<15} {:>4} {:>18} {:>9} {:>7} {:>10}\n",
            "dataset", "algorithm", "k", "cost", "recovery", "trials", "ms"
        ));
        for row in &report.rows {
            let ms = timings.get(&format!("{}/{}", row.dataset, row.algorithm));
            out.push_str(&format!(
                "{:<22} {:<15} {:>4} {:>18.6} {:>9} {:>7} {:>10}\n",
                row.dataset,
                row.algorithm.name(),
                row.k,
                row.cost,
                cell(row.recovery),
                row.trials,
                ms.map_or_else(|| "-".into(), |m| format!("{m:.1}")),
            ));
        }
    }
    for st in &report.stability {
        out.push_str(&format!(
            "\n{}: reference cost {:.6}, balance {:.3}\n  eps  min {:.6}  avg {:.6}  max {:.6}\n",
            st.dataset, st.reference_cost, st.balance, st.eps.min, st.eps.avg, st.eps.max
        ));
        for p in &st.profiles {
            out.push_str(&format!(
                "  eta {:<5} eps {:<5} rho/delta  min {:>8}  avg {:>8}  max {:>8}\n",
                p.eta,
                p.eps,
                cell(p.min),
                cell(p.avg),
                cell(p.max)
            ));
        }
    }
    for s in &report.suites {
        out.push_str(&format!("\nsuite {}: {} cases, {} failing\n", s.suite, s.cases, s.failing_cases()));
        for (name, count) in &s.checks {
            let failed = s.failures_of(name).count();
            out.push_str(&format!("  {name:<26} {count:>6} run {failed:>4} failed\n"));
        }
        for f in s.failures.iter().take(20) {
            out.push_str(&format!("  FAIL case {} seed {} {}: {}\n", f.case, f.seed, f.check, f.message));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Instance {
        let rows = [[0.0, 0.0], [0.5, 0.2], [0.1, 0.6], [9.0, 9.0], [9.4, 8.7], [8.8, 9.3]];
        Instance::new(Matrix::from_rows(&rows).unwrap(), Some(vec![0, 0, 0, 1, 1, 1]), "blobs").unwrap()
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("kmeans".parse::<Algorithm>().is_err());
    }

    #[test]
    fn every_algorithm_splits_blobs() {
        let inst = blobs();
        let cfg = Config::default();
        let opts = RunOptions { trials: 5, ..RunOptions::new(2, 1) };
        for a in Algorithm::ALL {
            let out = run_algorithm(&inst, a, &opts, &cfg).unwrap();
            assert!(out.clustering.same_partition(&[0, 0, 0, 1, 1, 1]), "{a}");
            assert_eq!(out.trial_costs.len(), if a.is_randomized() { 5 } else { 0 });
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let inst = blobs();
        let cfg = Config::default();
        let opts = RunOptions { trials: 8, ..RunOptions::new(2, 42) };
        let a = run_algorithm(&inst, Algorithm::Kmeanspp, &opts, &cfg).unwrap();
        let b = run_algorithm(&inst, Algorithm::Kmeanspp, &opts, &cfg).unwrap();
        assert_eq!(a.trial_costs, b.trial_costs);
    }

    #[test]
    fn robust_needs_both_overrides() {
        let opts = RunOptions { r: Some(1.0), ..RunOptions::new(2, 0) };
        let err = run_algorithm(&blobs(), Algorithm::Robust, &opts, &Config::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn assignment_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_assignment(&path, &[0, 1, 1, 0]).unwrap();
        assert_eq!(read_assignment(&path).unwrap(), vec![0, 1, 1, 0]);
        let centers = Matrix::from_rows(&[[0.1, 1.0 / 3.0], [-2.5e-300, 7.0]]).unwrap();
        write_centers(&path, &centers).unwrap();
        assert_eq!(read_centers(&path).unwrap(), centers);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::MissingDataset(vec!["x".into()])), 3);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
    }

    #[test]
    fn missing_file_is_missing_dataset() {
        let err = load_dataset("/nonexistent/file.csv", false).unwrap_err();
        assert!(matches!(err, Error::MissingDataset(_)));
    }
}
