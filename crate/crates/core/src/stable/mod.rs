//! Threshold-graph clustering: connect points closer than `r`, seed with the
//! means of the `k` largest components, assign every point to its nearest
//! seed, and keep the cheapest result over all thresholds.
//!
//! The threshold sweep inserts edges in ascending length order and only
//! evaluates states in which the component structure just changed. Between
//! two merge events the seeds, and therefore the clustering, are identical.

mod edges;
mod forest;

pub use edges::{
    edge_stream, sorted_edges, spanning_tree_edges, Edge, EdgeList, ExternalEdges, MemoryMode, AUTO_IN_MEMORY_MAX_EDGES,
};
pub use forest::ComponentForest;

use tracing::debug;

use crate::error::{Error, Result};
use crate::instance::{dist, Clustering, Instance, Matrix};
use crate::kmeans;

/// Outcome of [`initialize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    Means(Matrix),
    Insufficient { found: usize },
}

impl Initialization {
    pub fn into_result(self, k: usize) -> Result<Matrix> {
        match self {
            Self::Means(m) => Ok(m),
            Self::Insufficient { found } => Err(Error::Insufficient { found, k }),
        }
    }
}

/// Union-find state of the graph with an edge for every pair at distance `< r`.
pub fn components_at(inst: &Instance, r: f64) -> ComponentForest {
    let mut forest = ComponentForest::new(inst);
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            if dist(inst.point(i), inst.point(j)) < r {
                forest.union(i, j);
            }
        }
    }
    forest
}

/// Means of the `k` largest components, largest first.
///
/// Means are summed over members in index order, so they do not depend on
/// the order in which components were merged.
pub fn initialize(forest: &mut ComponentForest, inst: &Instance, k: usize) -> Initialization {
    if forest.component_count() < k {
        return Initialization::Insufficient { found: forest.component_count() };
    }
    let roots = forest.largest_roots(k);
    Initialization::Means(member_means(forest, inst, &roots))
}

pub(crate) fn member_means(forest: &mut ComponentForest, inst: &Instance, roots: &[usize]) -> Matrix {
    let d = inst.d();
    let mut rank = vec![usize::MAX; inst.n()];
    for (c, &r) in roots.iter().enumerate() {
        rank[r] = c;
    }
    let mut means = Matrix::zeros(roots.len(), d);
    for i in 0..inst.n() {
        let c = rank[forest.find(i)];
        if c != usize::MAX {
            means.row_mut(c).iter_mut().zip(inst.point(i)).for_each(|(m, x)| *m += x);
        }
    }
    for (c, &r) in roots.iter().enumerate() {
        let s = forest.size_of(r) as f64;
        means.row_mut(c).iter_mut().for_each(|m| *m /= s);
    }
    means
}

/// Calls `visit(forest, r)` on every distinct component structure of the
/// `< r` graph, in increasing `r`. The first call is the all-singletons state
/// at `r = 0`; each later call follows a group of equal-length edges that
/// merged at least one pair of components, with `r` the smallest float above
/// that length. Every memory mode reports the same sequence.
pub fn for_each_state<F>(inst: &Instance, mode: MemoryMode, mut visit: F) -> Result<()>
where
    F: FnMut(&mut ComponentForest, f64) -> Result<()>,
{
    let mut forest = ComponentForest::new(inst);
    let mut stream = edge_stream(inst, mode)?.peekable();
    visit(&mut forest, 0.0)?;
    let mut merged = false;
    while let Some(edge) = stream.next() {
        let edge = edge?;
        merged |= forest.union(edge.i as usize, edge.j as usize);
        let next_len = match stream.peek() {
            Some(Ok(e)) => Some(e.len),
            Some(Err(_)) => return stream.next().unwrap().map(|_| ()),
            None => None,
        };
        if next_len == Some(edge.len) {
            continue;
        }
        if merged {
            visit(&mut forest, edge.len.next_up())?;
            merged = false;
        }
        if forest.component_count() == 1 {
            break;
        }
    }
    Ok(())
}

/// Thresholds `r` of every state visited by [`for_each_state`].
pub fn merge_thresholds(inst: &Instance, mode: MemoryMode) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for_each_state(inst, mode, |_, r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub memory: MemoryMode,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub clustering: Clustering,
    /// Seeds `a_1..a_k` of the winning threshold.
    pub seeds: Matrix,
    /// Winning threshold: the graph had an edge for every pair closer than this.
    pub threshold: f64,
    /// States whose seeds were assigned and costed.
    pub evaluated: usize,
    /// States visited, including ones with too few components.
    pub visited: usize,
}

pub fn cluster(inst: &Instance, k: usize) -> Result<Clustering> {
    cluster_with(inst, k, SweepOptions::default()).map(|o| o.clustering)
}

/// Sweep with explicit options. Ties in cost keep the smallest threshold.
pub fn cluster_with(inst: &Instance, k: usize, opts: SweepOptions) -> Result<SweepOutcome> {
    let n = inst.n();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if n == 1 {
        let clustering = Clustering::from_assignment(inst, vec![0], 1)?;
        let seeds = clustering.centers.clone();
        return Ok(SweepOutcome { clustering, seeds, threshold: 0.0, evaluated: 1, visited: 1 });
    }
    let mut best: Option<SweepOutcome> = None;
    let mut last_signature: Vec<u64> = Vec::new();
    let mut evaluated = 0;
    let mut visited = 0;
    for_each_state(inst, opts.memory, |forest, r| {
        visited += 1;
        if forest.component_count() < k {
            return Ok(());
        }
        let roots = forest.largest_roots(k);
        let signature: Vec<u64> = roots.iter().map(|&r| forest.version_of(r)).collect();
        if signature == last_signature {
            return Ok(());
        }
        last_signature = signature;
        let seeds = member_means(forest, inst, &roots);
        let assignment = kmeans::assign(inst, &seeds)?;
        let clustering = Clustering::from_assignment(inst, assignment, k)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|b| clustering.cost < b.clustering.cost) {
            best = Some(SweepOutcome { clustering, seeds, threshold: r, evaluated: 0, visited: 0 });
        }
        Ok(())
    })?;
    let mut out = best.expect("the singleton state has n >= k components");
    out.evaluated = evaluated;
    out.visited = visited;
    debug!(evaluated, visited, cost = out.clustering.cost, "threshold sweep done");
    Ok(out)
}

/// [`cluster`] followed by Lloyd's algorithm started from the winning seeds.
pub fn cluster_then_lloyd(inst: &Instance, k: usize, tol: f64, max_iter: usize) -> Result<Clustering> {
    let out = cluster_with(inst, k, SweepOptions::default())?;
    kmeans::lloyd(inst, &out.seeds, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Instance {
        Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0]).unwrap()
    }

    #[test]
    fn components_at_examples() {
        let mut f = components_at(&toy(), 0.0);
        assert_eq!(f.component_count(), 4);
        let mut f1 = components_at(&toy(), 13.0);
        assert_eq!(f1.component_count(), 1);
        let r = f1.find(0);
        assert_eq!(f1.mean(r), vec![6.0]);
        let mut f3 = components_at(&toy(), 3.0);
        assert_eq!(f3.components(), vec![vec![0, 1], vec![2, 3]]);
        let Initialization::Means(m) = initialize(&mut f3, &toy(), 2) else { panic!("two components") };
        assert_eq!(m.to_rows(), vec![vec![1.0], vec![11.0]]);
        assert_eq!(
            initialize(&mut f, &toy(), 4),
            Initialization::Means(Matrix::from_vec(4, 1, vec![0.0, 2.0, 10.0, 12.0]).unwrap())
        );
    }

    #[test]
    fn initialize_prefers_larger_components() {
        let inst = Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0, 100.0]).unwrap();
        let mut f = components_at(&inst, 3.0);
        let m = initialize(&mut f, &inst, 2).into_result(2).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0], vec![11.0]]);
        let mut one = components_at(&inst, 1000.0);
        assert_eq!(initialize(&mut one, &inst, 2), Initialization::Insufficient { found: 1 });
    }

    #[test]
    fn toy_sweep() {
        let out = cluster_with(&toy(), 2, SweepOptions::default()).unwrap();
        assert_eq!(out.clustering.assignment, vec![0, 0, 1, 1]);
        assert_eq!(out.clustering.cost, 4.0);
        assert_eq!(out.threshold, 2f64.next_up());
        assert!(out.evaluated <= 4);
    }

    #[test]
    fn k_equals_n_costs_zero() {
        let c = cluster(&toy(), 4).unwrap();
        assert_eq!(c.cost, 0.0);
        assert!(matches!(cluster(&toy(), 5), Err(Error::KTooLarge { k: 5, n: 4 })));
    }

    #[test]
    fn thresholds_follow_merges() {
        let expected = vec![0.0, 2f64.next_up(), 8f64.next_up()];
        assert_eq!(merge_thresholds(&toy(), MemoryMode::InMemory).unwrap(), expected);
        assert_eq!(merge_thresholds(&toy(), MemoryMode::SpanningTree).unwrap(), expected);
    }

    #[test]
    fn memory_modes_agree() {
        let vals: Vec<f64> = (0..60).map(|i| ((i * 41) % 29) as f64 + (i % 3) as f64 * 0.25).collect();
        let inst = Instance::from_scalars(&vals).unwrap();
        let base = cluster_with(&inst, 3, SweepOptions { memory: MemoryMode::InMemory }).unwrap();
        for memory in [MemoryMode::SpanningTree, MemoryMode::ExternalSort { chunk_edges: 100 }] {
            let other = cluster_with(&inst, 3, SweepOptions { memory }).unwrap();
            assert_eq!(other.clustering, base.clustering);
            assert_eq!(other.threshold, base.threshold);
        }
    }
}
