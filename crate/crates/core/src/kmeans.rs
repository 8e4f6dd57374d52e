//! The k-means objective, Lloyd's algorithm, k-means++ seeding and an
//! exhaustive optimum for tiny instances.

use rand::Rng as _;
use tracing::debug;

use crate::error::{Error, Result};
use crate::instance::{assigned_cost, pairwise_sum, sq_dist, Clustering, Instance, Matrix};
use crate::rng;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 300;

fn check_dims(inst: &Instance, centers: &Matrix) -> Result<()> {
    if centers.cols() != inst.d() {
        return Err(Error::DimensionMismatch { expected: inst.d(), found: centers.cols() });
    }
    if centers.rows() == 0 {
        return Err(Error::InvalidParameter("at least one center is required".into()));
    }
    Ok(())
}

/// Index and squared distance of the nearest center; ties go to the smallest index.
#[inline]
pub fn nearest(x: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.iter_rows().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Sum of squared distances from every point to its nearest center.
pub fn cost(inst: &Instance, centers: &Matrix) -> Result<f64> {
    check_dims(inst, centers)?;
    let terms: Vec<f64> = (0..inst.n()).map(|i| nearest(inst.point(i), centers).1).collect();
    Ok(pairwise_sum(&terms))
}

pub fn assign(inst: &Instance, centers: &Matrix) -> Result<Vec<usize>> {
    check_dims(inst, centers)?;
    Ok((0..inst.n()).map(|i| nearest(inst.point(i), centers).0).collect())
}

/// Per-cluster means. Empty clusters get an all-NaN row and are listed in the
/// second return value.
pub fn centroids(inst: &Instance, assignment: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let d = inst.d();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(inst.point(i)) {
            *s += x;
        }
    }
    let mut empty = Vec::new();
    for (c, &count) in counts.iter().enumerate() {
        let row = sums.row_mut(c);
        if count == 0 {
            row.fill(f64::NAN);
            empty.push(c);
        } else {
            let inv = count as f64;
            row.iter_mut().for_each(|v| *v /= inv);
        }
    }
    (sums, empty)
}

/// Result of a Lloyd run with its per-iteration objective.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub clustering: Clustering,
    pub iterations: usize,
    /// Objective after every iteration; non-increasing.
    pub cost_history: Vec<f64>,
    pub converged: bool,
}

pub fn lloyd(inst: &Instance, init_centers: &Matrix, tol: f64, max_iter: usize) -> Result<Clustering> {
    lloyd_detailed(inst, init_centers, tol, max_iter).map(|r| r.clustering)
}

/// Alternates assignment and centroid steps until the relative improvement of
/// the objective drops below `tol`, the assignment stops changing, or
/// `max_iter` iterations have run.
///
/// An empty cluster gets the point farthest from its current center.
pub fn lloyd_detailed(inst: &Instance, init_centers: &Matrix, tol: f64, max_iter: usize) -> Result<LloydRun> {
    check_dims(inst, init_centers)?;
    if !(tol >= 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(format!(
            "lloyd needs tol >= 0 and max_iter >= 1 (tol={tol}, max_iter={max_iter})"
        )));
    }
    let k = init_centers.rows();
    let mut centers = init_centers.clone();
    let mut previous: Option<Vec<usize>> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let assignment = assign(inst, &centers)?;
        let (mut next, empty) = centroids(inst, &assignment, k);
        let cost = assigned_cost(inst, &assignment, &next);
        let unchanged = previous.as_ref() == Some(&assignment);
        let improved_little = history.last().is_some_and(|&prev: &f64| prev - cost <= tol * prev.abs());
        history.push(cost);
        if !empty.is_empty() {
            reseed_empty(inst, &assignment, &mut next, &empty);
        }
        centers = next;
        previous = Some(assignment);
        if empty.is_empty() && (unchanged || improved_little) {
            converged = true;
            break;
        }
    }
    debug!(iterations, converged, "lloyd finished");
    let assignment = previous.expect("at least one iteration");
    let clustering = Clustering::from_assignment(inst, assignment, k)?;
    Ok(LloydRun { clustering, iterations, cost_history: history, converged })
}

fn reseed_empty(inst: &Instance, assignment: &[usize], centers: &mut Matrix, empty: &[usize]) {
    let mut taken = vec![false; inst.n()];
    for &e in empty {
        let far = (0..inst.n())
            .filter(|&i| !taken[i])
            .map(|i| {
                let own = centers.row(assignment[i]);
                let d = if own[0].is_nan() { 0.0 } else { sq_dist(inst.point(i), own) };
                (i, d)
            })
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if far.0 == usize::MAX {
            break;
        }
        taken[far.0] = true;
        centers.row_mut(e).copy_from_slice(inst.point(far.0));
    }
}

/// k-means++ (D^2-weighted) seeding.
pub fn kmeanspp_init(inst: &Instance, k: usize, seed: u64) -> Result<Matrix> {
    let mut rng = rng::seeded(seed);
    kmeanspp_with_rng(inst, k, &mut rng)
}

pub fn kmeanspp_with_rng(inst: &Instance, k: usize, rng: &mut rng::Rng) -> Result<Matrix> {
    let n = inst.n();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut weights: Vec<f64> = (0..n).map(|i| sq_dist(inst.point(i), inst.point(first))).collect();
    while chosen.len() < k {
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total weight")
        } else {
            // every remaining point duplicates a chosen center
            let free: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        is_chosen[next] = true;
        for (i, w) in weights.iter_mut().enumerate() {
            *w = w.min(sq_dist(inst.point(i), inst.point(next)));
        }
        weights[next] = 0.0;
    }
    let rows: Vec<&[f64]> = chosen.iter().map(|&i| inst.point(i)).collect();
    Matrix::from_rows(&rows)
}

pub const BRUTE_FORCE_MAX_N: usize = 16;
pub const BRUTE_FORCE_MAX_K: usize = 3;

/// Outcome of the exhaustive search.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub clustering: Clustering,
    /// Cheapest objective among all other partitions, if any exist.
    pub runner_up_cost: Option<f64>,
}

/// Globally optimal k-clustering by enumerating every partition into exactly
/// `k` nonempty parts.
pub fn brute_force_kmeans(inst: &Instance, k: usize) -> Result<Clustering> {
    brute_force_search(inst, k).map(|b| b.clustering)
}

/// Partitions are enumerated as restricted-growth strings (each labeling of a
/// partition in first-appearance form) in lexicographic order; the first
/// strict minimum wins, so ties resolve to the lexicographically smallest
/// assignment.
pub fn brute_force_search(inst: &Instance, k: usize) -> Result<BruteForce> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N || k > BRUTE_FORCE_MAX_K {
        return Err(Error::TooLarge(format!(
            "brute force is limited to n <= {BRUTE_FORCE_MAX_N}, k <= {BRUTE_FORCE_MAX_K} (got n={n}, k={k})"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let d = inst.d();
    // center the data so the sum-of-squares identity loses little precision
    let mut mean = vec![0.0; d];
    for i in 0..n {
        mean.iter_mut().zip(inst.point(i)).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> =
        (0..n).map(|i| inst.point(i).iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let sq: Vec<f64> = centered.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();

    let mut search =
        Enumerator { k, d, points: &centered, sq: &sq, labels: vec![0; n], best: None, runner_up: f64::INFINITY };
    let root = PartialSums::new(k, d);
    search.descend(0, 0, &root);
    let (best_cost, best_labels) = search.best.expect("k <= n admits a partition");
    let _ = best_cost;
    let runner_up = search.runner_up;
    let clustering = Clustering::from_assignment(inst, best_labels, k)?;
    Ok(BruteForce { clustering, runner_up_cost: runner_up.is_finite().then_some(runner_up.max(0.0)) })
}

#[derive(Clone)]
struct PartialSums {
    sums: Vec<f64>,
    sq: Vec<f64>,
    counts: Vec<usize>,
}

impl PartialSums {
    fn new(k: usize, d: usize) -> Self {
        Self { sums: vec![0.0; k * d], sq: vec![0.0; k], counts: vec![0; k] }
    }
}

struct Enumerator<'a> {
    k: usize,
    d: usize,
    points: &'a [Vec<f64>],
    sq: &'a [f64],
    labels: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    runner_up: f64,
}

impl Enumerator<'_> {
    fn descend(&mut self, idx: usize, used: usize, acc: &PartialSums) {
        let n = self.points.len();
        if idx == n {
            if used == self.k {
                self.leaf(acc);
            }
            return;
        }
        // not enough points left to open the remaining clusters
        if n - idx < self.k - used {
            return;
        }
        let max_label = (used + 1).min(self.k);
        for label in 0..max_label {
            let mut next = acc.clone();
            next.counts[label] += 1;
            next.sq[label] += self.sq[idx];
            let row = &mut next.sums[label * self.d..(label + 1) * self.d];
            row.iter_mut().zip(&self.points[idx]).for_each(|(s, x)| *s += x);
            self.labels[idx] = label;
            self.descend(idx + 1, used.max(label + 1), &next);
        }
    }

    fn leaf(&mut self, acc: &PartialSums) {
        let mut cost = 0.0;
        for c in 0..self.k {
            let s = &acc.sums[c * self.d..(c + 1) * self.d];
            let norm2: f64 = s.iter().map(|v| v * v).sum();
            cost += acc.sq[c] - norm2 / acc.counts[c] as f64;
        }
        match &mut self.best {
            Some((best, labels)) => {
                if cost < *best {
                    self.runner_up = *best;
                    *best = cost;
                    labels.copy_from_slice(&self.labels);
                } else if cost < self.runner_up {
                    self.runner_up = cost;
                }
            }
            None => self.best = Some((cost, self.labels.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> Instance {
        Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0]).unwrap()
    }

    fn centers(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(&toy(), &centers(&[1.0, 11.0])).unwrap(), 4.0);
        let same = Instance::from_scalars(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(cost(&same, &centers(&[3.0])).unwrap(), 0.0);
        let wrong = Matrix::zeros(2, 2);
        assert!(matches!(cost(&toy(), &wrong), Err(Error::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn assign_examples() {
        assert_eq!(assign(&toy(), &centers(&[1.0, 11.0])).unwrap(), vec![0, 0, 1, 1]);
        let tie = Instance::from_scalars(&[5.0]).unwrap();
        assert_eq!(assign(&tie, &centers(&[4.0, 6.0])).unwrap(), vec![0]);
        let pts = [0.0, 3.0, 7.0];
        let inst = Instance::from_scalars(&pts).unwrap();
        assert_eq!(assign(&inst, &centers(&pts)).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn centroid_examples() {
        let inst = Instance::from_scalars(&[0.0, 2.0]).unwrap();
        let (c, empty) = centroids(&inst, &[0, 0], 1);
        assert_eq!(c.row(0), &[1.0]);
        assert!(empty.is_empty());
        let inst = Instance::unlabeled(Matrix::from_rows(&[[1.0, 1.0], [3.0, 5.0]]).unwrap()).unwrap();
        let (c, _) = centroids(&inst, &[0, 0], 1);
        assert_eq!(c.row(0), &[2.0, 3.0]);
        let (c, empty) = centroids(&inst, &[0, 0], 2);
        assert_eq!(empty, vec![1]);
        assert!(c.row(1)[0].is_nan());
    }

    #[test]
    fn lloyd_hand_trace() {
        let run = lloyd_detailed(&toy(), &centers(&[0.0, 12.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(run.clustering.cost, 4.0);
        assert_eq!(run.clustering.centers.row(0), &[1.0]);
        assert_eq!(run.clustering.centers.row(1), &[11.0]);
        assert!(run.converged);
    }

    #[test]
    fn lloyd_fixed_point() {
        let run = lloyd_detailed(&toy(), &centers(&[1.0, 11.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(run.clustering.assignment, vec![0, 0, 1, 1]);
        assert_eq!(run.cost_history, vec![4.0, 4.0]);
    }

    #[test]
    fn lloyd_rejects_bad_params() {
        assert!(lloyd(&toy(), &centers(&[0.0]), -1.0, 5).is_err());
        assert!(lloyd(&toy(), &centers(&[0.0]), 0.0, 0).is_err());
    }

    #[test]
    fn lloyd_reseeds_empty_clusters() {
        // both initial centers far right; the second never wins a point at first
        let run = lloyd_detailed(&toy(), &centers(&[100.0, 200.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(run.clustering.empty_clusters.is_empty());
        assert_eq!(run.clustering.cost, 4.0);
    }

    #[test]
    fn kmeanspp_examples() {
        let inst = Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0, 40.0]).unwrap();
        let c = kmeanspp_init(&inst, 5, 7).unwrap();
        let mut got: Vec<f64> = c.iter_rows().map(|r| r[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.0, 2.0, 10.0, 12.0, 40.0]);
        let one = kmeanspp_init(&inst, 1, 3).unwrap();
        assert!([0.0, 2.0, 10.0, 12.0, 40.0].contains(&one.row(0)[0]));
        assert!(matches!(kmeanspp_init(&inst, 6, 0), Err(Error::KTooLarge { k: 6, n: 5 })));
        assert_eq!(kmeanspp_init(&inst, 3, 11).unwrap(), kmeanspp_init(&inst, 3, 11).unwrap());
    }

    #[test]
    fn kmeanspp_with_duplicates_fills_k() {
        let inst = Instance::from_scalars(&[1.0, 1.0, 1.0]).unwrap();
        let c = kmeanspp_init(&inst, 3, 0).unwrap();
        assert_eq!(c.rows(), 3);
    }

    #[test]
    fn brute_force_examples() {
        let b = brute_force_search(&toy(), 2).unwrap();
        assert_eq!(b.clustering.cost, 4.0);
        assert_eq!(b.clustering.assignment, vec![0, 0, 1, 1]);
        // next best split: {0},{2,10,12} -> 0 + 2*(8^2)/3*... just check it is worse
        assert!(b.runner_up_cost.unwrap() > 4.0);

        let n3 = Instance::from_scalars(&[1.0, 5.0, 9.0]).unwrap();
        assert_eq!(brute_force_kmeans(&n3, 3).unwrap().cost, 0.0);

        let all = brute_force_kmeans(&toy(), 1).unwrap();
        assert_eq!(all.centers.row(0), &[6.0]);
        assert_relative_eq!(all.cost, 36.0 + 16.0 + 16.0 + 36.0);

        let big = Instance::from_scalars(&[0.0; 17]).unwrap();
        assert!(matches!(brute_force_kmeans(&big, 2), Err(Error::TooLarge(_))));
    }

    #[test]
    fn brute_force_tie_prefers_lexicographically_smallest() {
        // symmetric square: both axis-aligned splits cost the same
        let inst =
            Instance::unlabeled(Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap()).unwrap();
        let b = brute_force_kmeans(&inst, 2).unwrap();
        assert_eq!(b.assignment, vec![0, 0, 1, 1]);
        assert_relative_eq!(b.cost, 1.0);
    }
}
