//! Threshold-graph clustering that tolerates a small fraction of arbitrary
//! extra points: vertices of low degree are deleted before the components are
//! formed, and every input point is assigned at the end.

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::error::{Error, Result};
use crate::instance::{dist, Clustering, Instance};
use crate::kmeans;
use crate::stable::{self, sorted_edges, ComponentForest, Edge, MemoryMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustParams {
    pub eta: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub alpha: f64,
    pub r: f64,
    pub t: f64,
    pub delta: f64,
    pub eps: f64,
}

/// Threshold `r` and degree cutoff `t` for outlier fraction `eta` and cluster
/// weights in `[w_min, w_max]`:
/// `alpha = 2(w_max + eta)/(w_min - eta)`, `r = delta(alpha + 1)(1 + 2/eps)`,
/// `t = w_min n alpha/(alpha + 1)`.
pub fn robust_params(delta: f64, eps: f64, w_min: f64, w_max: f64, eta: f64, n: usize) -> Result<RobustParams> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(w_min > 0.0 && w_min <= w_max && w_max <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster weights need 0 < w_min <= w_max <= 1 (got {w_min}, {w_max})"
        )));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta must lie in [0, 1), got {eta}")));
    }
    if eta >= w_min {
        return Err(Error::EtaTooLarge { eta, w_min });
    }
    let alpha = 2.0 * (w_max + eta) / (w_min - eta);
    Ok(RobustParams {
        eta,
        w_min,
        w_max,
        alpha,
        r: delta * (alpha + 1.0) * (1.0 + 2.0 / eps),
        t: w_min * n as f64 * alpha / (alpha + 1.0),
        delta,
        eps,
    })
}

/// Degree of every vertex in the graph with an edge for each pair closer than `r`.
pub fn degrees(inst: &Instance, r: f64) -> Vec<usize> {
    let n = inst.n();
    let mut deg = vec![0; n];
    for i in 0..n {
        for j in i + 1..n {
            if dist(inst.point(i), inst.point(j)) < r {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
    }
    deg
}

/// Indices (ascending) of the vertices whose degree in the `< r` graph is at
/// least `t`. Degrees come from the unpruned graph.
pub fn prune_low_degree(inst: &Instance, r: f64, t: f64) -> Vec<usize> {
    degrees(inst, r).into_iter().enumerate().filter(|&(_, d)| d as f64 >= t).map(|(i, _)| i).collect()
}

/// Forest over the survivors only; pruned vertices stay isolated and are
/// never reported as components.
fn survivor_forest<'a>(
    inst: &Instance,
    alive: &[bool],
    edges: impl IntoIterator<Item = &'a Edge>,
) -> (ComponentForest, usize) {
    let mut forest = ComponentForest::new(inst);
    let mut count = alive.iter().filter(|&&a| a).count();
    for e in edges {
        let (i, j) = (e.i as usize, e.j as usize);
        if alive[i] && alive[j] && forest.union(i, j) {
            count -= 1;
        }
    }
    (forest, count)
}

fn cluster_survivors(
    inst: &Instance,
    k: usize,
    alive: &[bool],
    forest: &mut ComponentForest,
    count: usize,
) -> Result<Clustering> {
    if count < k {
        return Err(Error::Insufficient { found: count, k });
    }
    let roots = forest.largest_roots_where(k, |r| alive[r]);
    let seeds = stable::member_means(forest, inst, &roots);
    let assignment = kmeans::assign(inst, &seeds)?;
    Clustering::from_assignment(inst, assignment, k)
}

/// Prune, seed with the `k` largest surviving components, assign all points.
pub fn robust_cluster(inst: &Instance, k: usize, r: f64, t: f64) -> Result<Clustering> {
    robust_seeds_and_cluster(inst, k, r, t).map(|(c, _)| c)
}

/// Survivor components alongside the clustering, for callers that inspect them.
#[derive(Debug, Clone)]
pub struct RobustTrace {
    pub survivors: Vec<usize>,
    /// Members of the `k` largest surviving components, largest first.
    pub top_components: Vec<Vec<usize>>,
    pub seeds: crate::instance::Matrix,
}

pub fn robust_seeds_and_cluster(inst: &Instance, k: usize, r: f64, t: f64) -> Result<(Clustering, RobustTrace)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(r >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("r and t must be non-negative (r={r}, t={t})")));
    }
    let survivors = prune_low_degree(inst, r, t);
    let mut alive = vec![false; inst.n()];
    survivors.iter().for_each(|&i| alive[i] = true);
    let n = inst.n();
    let mut close = Vec::new();
    for &i in &survivors {
        for j in i + 1..n {
            if alive[j] {
                let len = dist(inst.point(i), inst.point(j));
                if len < r {
                    close.push(Edge { i: i as u32, j: j as u32, len });
                }
            }
        }
    }
    let (mut forest, count) = survivor_forest(inst, &alive, &close);
    let clustering = cluster_survivors(inst, k, &alive, &mut forest, count)?;
    let roots = forest.largest_roots_where(k, |x| alive[x]);
    let seeds = stable::member_means(&mut forest, inst, &roots);
    let labels = forest.root_labels();
    let top_components = roots.iter().map(|&root| (0..n).filter(|&i| labels[i] == root).collect()).collect();
    Ok((clustering, RobustTrace { survivors, top_components, seeds }))
}

/// Candidate degree cutoffs for [`robust_cluster_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum TGrid {
    /// Exhaustive integers `0..=n` up to `exhaustive_max_n` points, else a
    /// geometric grid of at most `geometric_points` values.
    Auto {
        exhaustive_max_n: usize,
        geometric_points: usize,
    },
    Exhaustive,
    Geometric {
        points: usize,
    },
}

impl Default for TGrid {
    fn default() -> Self {
        Self::Auto { exhaustive_max_n: 2000, geometric_points: 64 }
    }
}

impl TGrid {
    /// Ascending, deduplicated integer cutoffs.
    pub fn values(&self, n: usize) -> Vec<usize> {
        match *self {
            Self::Exhaustive => (0..=n).collect(),
            Self::Auto { exhaustive_max_n, .. } if n <= exhaustive_max_n => (0..=n).collect(),
            Self::Auto { geometric_points, .. } => geometric(n, geometric_points),
            Self::Geometric { points } => geometric(n, points),
        }
    }
}

/// `0` plus `points - 1` geometrically spaced values from 1 to `n`.
fn geometric(n: usize, points: usize) -> Vec<usize> {
    let mut out = vec![0, n];
    let steps = points.saturating_sub(2);
    for s in 0..=steps {
        let v = (n as f64).powf(s as f64 / steps.max(1) as f64).round() as usize;
        out.push(v.min(n));
    }
    out.sort_unstable();
    out.dedup();
    out.truncate(points.max(2));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobustSearchOptions {
    pub t_grid: TGrid,
    /// Evaluate at most this many thresholds, spread evenly over the merge events.
    pub max_thresholds: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RobustSearchOutcome {
    pub clustering: Clustering,
    pub r: f64,
    pub t: f64,
    pub evaluated: usize,
}

pub fn robust_cluster_search(inst: &Instance, k: usize) -> Result<Clustering> {
    robust_cluster_search_with(inst, k, RobustSearchOptions::default()).map(|o| o.clustering)
}

/// Minimum-cost [`robust_cluster`] over merge-event thresholds and the
/// t-grid. Ties keep the smallest `r`, then the smallest `t`.
///
/// Cutoffs that keep the same survivor set give the same clustering, so only
/// the smallest grid value of each distinct survivor set is evaluated.
pub fn robust_cluster_search_with(inst: &Instance, k: usize, opts: RobustSearchOptions) -> Result<RobustSearchOutcome> {
    let n = inst.n();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if n == 1 {
        let clustering = Clustering::from_assignment(inst, vec![0], 1)?;
        return Ok(RobustSearchOutcome { clustering, r: 0.0, t: 0.0, evaluated: 1 });
    }
    let mut thresholds = stable::merge_thresholds(inst, MemoryMode::InMemory)?;
    if let Some(cap) = opts.max_thresholds {
        if cap > 0 && thresholds.len() > cap {
            let m = thresholds.len();
            thresholds = (0..cap).map(|s| thresholds[s * (m - 1) / (cap - 1).max(1)]).collect();
            thresholds.dedup();
        }
    }
    let edges = sorted_edges(inst)?.edges;
    let grid = opts.t_grid.values(n);
    let mut deg = vec![0usize; n];
    let mut prefix = 0;
    let mut best: Option<RobustSearchOutcome> = None;
    let mut evaluated = 0;
    for &r in &thresholds {
        while prefix < edges.len() && edges[prefix].len < r {
            deg[edges[prefix].i as usize] += 1;
            deg[edges[prefix].j as usize] += 1;
            prefix += 1;
        }
        let mut last_survivors = usize::MAX;
        for &t in &grid {
            let alive: Vec<bool> = deg.iter().map(|&d| d >= t).collect();
            let survivors = alive.iter().filter(|&&a| a).count();
            // survivor sets shrink with t; equal counts mean equal sets
            if survivors == last_survivors {
                continue;
            }
            last_survivors = survivors;
            if survivors < k {
                break;
            }
            let (mut forest, count) = survivor_forest(inst, &alive, &edges[..prefix]);
            let clustering = match cluster_survivors(inst, k, &alive, &mut forest, count) {
                Ok(c) => c,
                Err(Error::Insufficient { .. }) => continue,
                Err(e) => return Err(e),
            };
            evaluated += 1;
            if best.as_ref().is_none_or(|b| clustering.cost < b.clustering.cost) {
                best = Some(RobustSearchOutcome { clustering, r, t: t as f64, evaluated: 0 });
            }
        }
    }
    let mut out = best.ok_or(Error::Insufficient { found: 0, k })?;
    out.evaluated = evaluated;
    debug!(evaluated, cost = out.clustering.cost, r = out.r, t = out.t, "robust search done");
    Ok(out)
}
