//! Two-means via linear separators: every pair of points defines a lifted
//! instance where the optimal split is a homogeneous halfspace, and that
//! halfspace is a short signed sum of normalized rows.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PairGeometry;
use crate::instance::{dot, norm, Clustering, Instance, Matrix};

/// Margin constant relating the lifted margin to `eps^4`.
pub const C1: f64 = 0.563;

/// A point with its side, `+1` or `-1`.
pub type Sample = (Vec<f64>, i8);

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronRun {
    pub w: Vec<f64>,
    pub mistakes: usize,
    /// `(sample index, mistakes on it)` for every sample with at least one mistake.
    pub mistake_multiset: Vec<(usize, usize)>,
    /// A full pass ended without mistakes.
    pub converged: bool,
    pub passes: usize,
}

/// Online perceptron with normalized updates `w += label * y / |y|`.
/// `<w, y> >= 0` predicts `+1`.
pub fn perceptron_run(samples: &[Sample], max_passes: usize) -> Result<PerceptronRun> {
    let d = samples.first().map_or(0, |s| s.0.len());
    let mut unit = Vec::with_capacity(samples.len());
    for (idx, (y, label)) in samples.iter().enumerate() {
        if y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: y.len() });
        }
        if *label != 1 && *label != -1 {
            return Err(Error::InvalidParameter(format!("label of sample {idx} must be +1 or -1")));
        }
        let nrm = norm(y);
        if nrm == 0.0 {
            return Err(Error::ZeroVectorSample(idx));
        }
        unit.push(y.iter().map(|v| v / nrm).collect::<Vec<_>>());
    }
    let mut w = vec![0.0; d];
    let mut counts = vec![0usize; samples.len()];
    let mut mistakes = 0;
    let mut converged = false;
    let mut passes = 0;
    while passes < max_passes {
        passes += 1;
        let mut pass_mistakes = 0;
        for (idx, (y, label)) in samples.iter().enumerate() {
            let predicted = if dot(&w, y) >= 0.0 { 1 } else { -1 };
            if predicted != *label {
                let l = f64::from(*label);
                w.iter_mut().zip(&unit[idx]).for_each(|(wv, u)| *wv += l * u);
                counts[idx] += 1;
                pass_mistakes += 1;
            }
        }
        mistakes += pass_mistakes;
        if pass_mistakes == 0 {
            converged = true;
            break;
        }
    }
    let mistake_multiset = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c)).collect();
    Ok(PerceptronRun { w, mistakes, mistake_multiset, converged, passes })
}

/// Signed margin of `w` on labeled samples: `min label <y, w> / (|y| |w|)`.
/// Negative when some sample is misclassified.
pub fn separator_margin(samples: &[Sample], w: &[f64]) -> f64 {
    let wn = norm(w);
    samples.iter().map(|(y, l)| f64::from(*l) * dot(y, w) / (norm(y) * wn)).fold(f64::INFINITY, f64::min)
}

/// Smallest multiset size for which the normalized-update perceptron is
/// guaranteed to have converged: `ceil(C1^-2 eps^-8)`.
pub fn multiset_size_bound(eps: f64) -> f64 {
    (C1.powi(-2) * eps.powi(-8)).ceil()
}

/// Translates the points so their mean is the origin. Already centered input
/// is returned as is.
pub fn center(inst: &Instance) -> Instance {
    let (n, d) = (inst.n(), inst.d());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        mean.iter_mut().zip(inst.point(i)).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    if mean.iter().all(|&m| m == 0.0) {
        return inst.clone();
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(inst.point(i).iter().zip(&mean).map(|(x, m)| x - m));
    }
    let points = Matrix::from_vec(n, d, data).expect("same shape");
    Instance::new(points, inst.labels().map(<[usize]>::to_vec), inst.name()).expect("translation keeps validity")
}

/// Centered points with a constant extra coordinate `delta = |a - b|`.
#[derive(Debug, Clone)]
pub struct LiftedInstance {
    pub base: Instance,
    pub a_idx: usize,
    pub b_idx: usize,
    pub delta: f64,
    pub lifted: Matrix,
}

pub fn lift(inst: &Instance, a_idx: usize, b_idx: usize) -> Result<LiftedInstance> {
    let n = inst.n();
    if a_idx >= n || b_idx >= n {
        return Err(Error::InvalidParameter(format!("pair ({a_idx}, {b_idx}) out of range for n = {n}")));
    }
    let base = center(inst);
    let delta = crate::instance::dist(base.point(a_idx), base.point(b_idx));
    if delta == 0.0 {
        return Err(Error::CoincidentPair { a: a_idx, b: b_idx });
    }
    let lifted = lift_rows(&base, delta);
    Ok(LiftedInstance { base, a_idx, b_idx, delta, lifted })
}

fn lift_rows(base: &Instance, delta: f64) -> Matrix {
    let (n, d) = (base.n(), base.d());
    let mut data = Vec::with_capacity(n * (d + 1));
    for i in 0..n {
        data.extend_from_slice(base.point(i));
        data.push(delta);
    }
    Matrix::from_vec(n, d + 1, data).expect("consistent shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateBudget {
    /// Largest multiset size `B`.
    pub max_multiset_size: usize,
    /// Candidates whose directions have at least this cosine are merged.
    pub dedup_cosine: f64,
}

impl Default for CandidateBudget {
    fn default() -> Self {
        Self { max_multiset_size: 3, dedup_cosine: 1.0 - 1e-12 }
    }
}

impl CandidateBudget {
    pub fn with_size(max_multiset_size: usize) -> Self {
        Self { max_multiset_size, ..Self::default() }
    }
}

/// Unit directions `sum_{y in M} l(y) y/|y|` over multisets `M` of at most `B`
/// rows and all sign assignments `l`, ordered by size, then indices, then
/// signs (`+1` before `-1`). Zero sums are skipped; near-parallel repeats are
/// dropped.
pub fn enumerate_candidates(lifted: &Matrix, budget: CandidateBudget) -> Result<Vec<Vec<f64>>> {
    if budget.max_multiset_size == 0 {
        return Err(Error::InvalidParameter("multiset size B must be at least 1".into()));
    }
    let (n, d) = (lifted.rows(), lifted.cols());
    let unit: Vec<Vec<f64>> = lifted
        .iter_rows()
        .map(|y| {
            let nrm = norm(y);
            y.iter().map(|v| v / nrm).collect()
        })
        .collect();
    let mut dedup = Dedup::new(budget.dedup_cosine);
    let mut out = Vec::new();
    let mut idx = Vec::new();
    for size in 1..=budget.max_multiset_size {
        idx.clear();
        idx.resize(size, 0);
        loop {
            for signs in 0u32..(1 << size) {
                let mut w = vec![0.0; d];
                for (pos, &i) in idx.iter().enumerate() {
                    let s = if signs >> (size - 1 - pos) & 1 == 0 { 1.0 } else { -1.0 };
                    w.iter_mut().zip(&unit[i]).for_each(|(wv, u)| *wv += s * u);
                }
                let nrm = norm(&w);
                // sums that cancel are zero up to rounding of the unit rows
                if nrm <= 1e-12 {
                    continue;
                }
                w.iter_mut().for_each(|v| *v /= nrm);
                if dedup.insert_if_new(&w) {
                    out.push(w);
                }
            }
            // next nondecreasing index tuple
            let mut p = size;
            while p > 0 && idx[p - 1] == n - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            idx[p - 1] += 1;
            let v = idx[p - 1];
            idx[p..].iter_mut().for_each(|x| *x = v);
        }
    }
    Ok(out)
}

/// Direction deduplication: coarse grid buckets, exact cosine check inside.
struct Dedup {
    threshold: f64,
    buckets: HashMap<Vec<i64>, Vec<Vec<f64>>>,
}

impl Dedup {
    const GRID: f64 = 1e6;

    fn new(threshold: f64) -> Self {
        Self { threshold, buckets: HashMap::new() }
    }

    fn key(w: &[f64]) -> Vec<i64> {
        w.iter().map(|v| (v * Self::GRID).round() as i64).collect()
    }

    /// Stores `w` unless a stored direction is within the threshold.
    fn insert_if_new(&mut self, w: &[f64]) -> bool {
        let list = self.buckets.entry(Self::key(w)).or_default();
        if list.iter().any(|v| dot(v, w) >= self.threshold) {
            return false;
        }
        list.push(w.to_vec());
        true
    }
}

/// Sums needed to cost a 2-split in O(d) on centered data.
struct SplitCoster {
    total_sq: f64,
    n: usize,
}

impl SplitCoster {
    fn new(centered: &Instance) -> Self {
        let total_sq = (0..centered.n()).map(|i| dot(centered.point(i), centered.point(i))).sum();
        Self { total_sq, n: centered.n() }
    }

    /// Cost of splitting off a part with coordinate sum `s` and `m` points;
    /// the complement's sum is `-s` because the data is centered.
    fn cost(&self, s: &[f64], m: usize) -> Option<f64> {
        if m == 0 || m == self.n {
            return None;
        }
        let s2 = dot(s, s);
        Some(self.total_sq - s2 / m as f64 - s2 / (self.n - m) as f64)
    }
}

fn split_labels(n: usize, part: &[usize]) -> Vec<usize> {
    // point 0 always gets id 0
    let mut inside = vec![false; n];
    part.iter().for_each(|&i| inside[i] = true);
    let flip = inside[0];
    (0..n).map(|i| usize::from(inside[i] != flip)).collect()
}

/// Best 2-clustering in which one side has one, two or three points. Ties
/// keep the lexicographically first subset.
pub fn small_cluster_exhaustive(inst: &Instance) -> Result<Clustering> {
    let n = inst.n();
    if n < 2 {
        return Err(Error::InvalidParameter("two-means needs at least two points".into()));
    }
    let base = center(inst);
    let coster = SplitCoster::new(&base);
    let d = inst.d();
    let max_size = 3.min(n - 1);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |subset: &[usize], s: &[f64]| {
        if let Some(c) = coster.cost(s, subset.len()) {
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, subset.to_vec()));
            }
        }
    };
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d];
    let mut s3 = vec![0.0; d];
    for a in 0..n {
        s1.copy_from_slice(base.point(a));
        consider(&[a], &s1);
        if max_size < 2 {
            continue;
        }
        for b in a + 1..n {
            s2.iter_mut().zip(&s1).zip(base.point(b)).for_each(|((o, x), y)| *o = x + y);
            consider(&[a, b], &s2);
            if max_size < 3 {
                continue;
            }
            for c in b + 1..n {
                s3.iter_mut().zip(&s2).zip(base.point(c)).for_each(|((o, x), y)| *o = x + y);
                consider(&[a, b, c], &s3);
            }
        }
    }
    let (_, subset) = best.expect("n >= 2 gives at least one split");
    Clustering::from_assignment(inst, split_labels(n, &subset), 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Cluster2Options {
    pub budget: CandidateBudget,
    /// Only the first `max_pairs` pairs in `(a, b)` order are lifted. Drops the
    /// recovery guarantee; unset by default.
    pub max_pairs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Cluster2Outcome {
    pub clustering: Clustering,
    /// Pair whose lifted instance produced the winner; `None` when the
    /// small-cluster search won.
    pub pair: Option<(usize, usize)>,
    pub candidates_evaluated: usize,
}

pub fn cluster2(inst: &Instance, budget: CandidateBudget) -> Result<Clustering> {
    cluster2_with(inst, Cluster2Options { budget, max_pairs: None }).map(|o| o.clustering)
}

/// Lifted-separator search over all pairs plus the small-cluster search.
/// The minimum is reduced by `(cost, pair index, candidate index)`, so the
/// result does not depend on the thread count.
pub fn cluster2_with(inst: &Instance, opts: Cluster2Options) -> Result<Cluster2Outcome> {
    let n = inst.n();
    if n < 2 {
        return Err(Error::InvalidParameter("two-means needs at least two points".into()));
    }
    let base = center(inst);
    let coster = SplitCoster::new(&base);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    if let Some(cap) = opts.max_pairs {
        pairs.truncate(cap);
    }
    // (cost, pair index, candidate index, side of every point)
    type PairBest = Option<(f64, usize, usize, Vec<bool>)>;
    let per_pair: Vec<Result<PairBest>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pi, &(a, b))| {
            let delta = crate::instance::dist(base.point(a), base.point(b));
            if delta == 0.0 {
                return Ok(None);
            }
            let lifted = lift_rows(&base, delta);
            let cands = enumerate_candidates(&lifted, opts.budget)?;
            let mut best: PairBest = None;
            let mut side = vec![false; n];
            let mut s = vec![0.0; base.d()];
            for (ci, w) in cands.iter().enumerate() {
                s.fill(0.0);
                let mut m = 0;
                for (i, y) in lifted.iter_rows().enumerate() {
                    side[i] = dot(w, y) >= 0.0;
                    if side[i] {
                        m += 1;
                        s.iter_mut().zip(base.point(i)).for_each(|(sv, x)| *sv += x);
                    }
                }
                if let Some(c) = coster.cost(&s, m) {
                    if best.as_ref().is_none_or(|b| c < b.0) {
                        best = Some((c, pi, ci, side.clone()));
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut evaluated = 0usize;
    let mut best: PairBest = None;
    for r in per_pair {
        if let Some(cand) = r? {
            evaluated += 1;
            let better = best.as_ref().is_none_or(|b| (cand.0, cand.1, cand.2) < (b.0, b.1, b.2));
            if better {
                best = Some(cand);
            }
        }
    }
    let small = small_cluster_exhaustive(inst)?;
    let Some((_, pi, _, side)) = best else {
        return Ok(Cluster2Outcome { clustering: small, pair: None, candidates_evaluated: 0 });
    };
    let part: Vec<usize> = (0..n).filter(|&i| side[i]).collect();
    let lifted_best = Clustering::from_assignment(inst, split_labels(n, &part), 2)?;
    if small.cost < lifted_best.cost {
        return Ok(Cluster2Outcome { clustering: small, pair: None, candidates_evaluated: evaluated });
    }
    Ok(Cluster2Outcome { clustering: lifted_best, pair: Some(pairs[pi]), candidates_evaluated: evaluated })
}

/// For a 2-clustering, the point of each cluster with the smallest signed
/// offset from the bisector towards its own mean. Returns `(a, b)` with `a`
/// in cluster 0.
pub fn closest_to_bisector(inst: &Instance, assignment: &[usize], g: &PairGeometry) -> Option<(usize, usize)> {
    let mut best = [(f64::INFINITY, usize::MAX); 2];
    for (i, &c) in assignment.iter().enumerate() {
        if c > 1 {
            return None;
        }
        let along = g.from_midpoint(inst.point(i)).along_u;
        // u points from the cluster-1 mean to the cluster-0 mean
        let own = if c == 0 { along } else { -along };
        if own < best[c].0 {
            best[c] = (own, i);
        }
    }
    (best[0].1 != usize::MAX && best[1].1 != usize::MAX).then_some((best[0].1, best[1].1))
}

/// The separator `(u, -<p, u>/delta)` of the lifted instance, which puts
/// cluster 0 on the positive side. Works in the lifted instance's centered
/// coordinates.
pub fn reference_separator(lifted: &LiftedInstance, assignment: &[usize]) -> Result<(Vec<f64>, Vec<Sample>)> {
    let base = &lifted.base;
    let (means, empty) = crate::kmeans::centroids(base, assignment, 2);
    if let Some(&e) = empty.first() {
        return Err(Error::EmptyCluster(e));
    }
    let g = crate::geometry::pair_geometry(means.row(0), means.row(1))?;
    let mut w = g.u.clone();
    w.push(-dot(&g.p, &g.u) / lifted.delta);
    let samples =
        lifted.lifted.iter_rows().zip(assignment).map(|(y, &c)| (y.to_vec(), if c == 0 { 1 } else { -1 })).collect();
    Ok((w, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::brute_force_kmeans;

    fn toy() -> Instance {
        Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0]).unwrap()
    }

    #[test]
    fn perceptron_examples() {
        let s = vec![(vec![1.0, 0.0], 1), (vec![-1.0, 0.0], -1)];
        let run = perceptron_run(&s, 10).unwrap();
        assert!(run.mistakes <= 1);
        assert!(run.converged);
        let bad = vec![(vec![1.0, 0.0], 1), (vec![1.0, 0.0], -1)];
        let run = perceptron_run(&bad, 7).unwrap();
        assert!(!run.converged);
        assert_eq!(run.passes, 7);
        let zero = vec![(vec![0.0, 0.0], 1)];
        assert!(matches!(perceptron_run(&zero, 3), Err(Error::ZeroVectorSample(0))));
    }

    #[test]
    fn perceptron_stops_after_clean_pass() {
        let s = vec![(vec![2.0, 1.0], 1), (vec![-1.0, -3.0], -1), (vec![1.0, 0.5], 1)];
        let run = perceptron_run(&s, 100).unwrap();
        assert!(run.converged);
        let again = perceptron_run(&s, run.passes).unwrap();
        assert_eq!(again, run);
    }

    #[test]
    fn lift_examples() {
        let inst = Instance::unlabeled(Matrix::from_rows(&[[1.0, 2.0], [-1.0, -2.0]]).unwrap()).unwrap();
        let l = lift(&inst, 0, 1).unwrap();
        assert_eq!(l.base, inst);
        assert_eq!(l.lifted.row(0), &[1.0, 2.0, l.delta]);
        assert!(matches!(
            lift(&Instance::from_scalars(&[3.0, 3.0]).unwrap(), 0, 1),
            Err(Error::CoincidentPair { a: 0, b: 1 })
        ));
    }

    #[test]
    fn candidate_examples() {
        let rows = Matrix::from_rows(&[[1.0, 0.0, 2.0], [-1.0, 0.0, 2.0]]).unwrap();
        let c = enumerate_candidates(&rows, CandidateBudget::with_size(1)).unwrap();
        assert_eq!(c.len(), 4);
        let s = 5f64.sqrt();
        let expect =
            [[1.0 / s, 0.0, 2.0 / s], [-1.0 / s, 0.0, -2.0 / s], [-1.0 / s, 0.0, 2.0 / s], [1.0 / s, 0.0, -2.0 / s]];
        for (got, want) in c.iter().zip(expect) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-15);
            }
        }
        // size 2 adds y1+y2, y1-y2 and their negatives; {y, y} repeats or cancels
        let c2 = enumerate_candidates(&rows, CandidateBudget::with_size(2)).unwrap();
        assert_eq!(c2.len(), 8);
    }

    #[test]
    fn small_cluster_examples() {
        let two = Instance::from_scalars(&[1.0, 5.0]).unwrap();
        assert_eq!(small_cluster_exhaustive(&two).unwrap().cost, 0.0);
        let toy = toy();
        assert_eq!(small_cluster_exhaustive(&toy).unwrap().cost, 4.0);
        let five = Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0, 100.0]).unwrap();
        let s = small_cluster_exhaustive(&five).unwrap();
        let b = brute_force_kmeans(&five, 2).unwrap();
        assert!((s.cost - b.cost).abs() <= 1e-12 * b.cost);
    }

    #[test]
    fn cluster2_on_toy() {
        let out =
            cluster2_with(&toy(), Cluster2Options { budget: CandidateBudget::with_size(1), max_pairs: None }).unwrap();
        assert_eq!(out.clustering.cost, 4.0);
        assert!(out.clustering.same_partition(&[0, 0, 1, 1]));
    }

    #[test]
    fn cluster2_with_all_points_equal() {
        let inst = Instance::from_scalars(&[7.0, 7.0, 7.0]).unwrap();
        let c = cluster2(&inst, CandidateBudget::default()).unwrap();
        assert_eq!(c.cost, 0.0);
    }

    #[test]
    fn bound_values() {
        assert_eq!(multiset_size_bound(0.5), (256.0 / (C1 * C1)).ceil());
    }
}
