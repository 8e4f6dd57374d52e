//! Stability measurements of a given clustering: the largest cone parameter
//! each cluster pair supports, margin/scale profiles after trimming, size
//! balance, and a brute-force perturbation check for tiny instances.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_geometry_indexed, PairGeometry};
use crate::instance::{dist, same_partition, Clustering, Instance, Matrix};
use crate::kmeans::{brute_force_kmeans, brute_force_search};
use crate::rng;

/// Largest cone parameter any pair can have.
pub const EPS_CAP: f64 = 0.5;

/// How a point's offset from the bisector enters the cone bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MarginSign {
    /// Offsets measured towards the point's own mean; a point on the wrong
    /// side of the bisector forces 0.
    #[default]
    Signed,
    /// Absolute offsets.
    Unsigned,
}

/// Per-point quantities of a pair: signed offset `s` towards the own mean
/// and distance `q` from the axis, both relative to the midpoint.
struct PairPoints {
    geometry: PairGeometry,
    s: Vec<f64>,
    q: Vec<f64>,
}

fn pair_points(clust: &Clustering, inst: &Instance, i: usize, j: usize) -> Result<PairPoints> {
    if i == j || i >= clust.k || j >= clust.k {
        return Err(Error::InvalidParameter(format!("invalid cluster pair ({i}, {j}) for k = {}", clust.k)));
    }
    if clust.assignment.len() != inst.n() {
        return Err(Error::SizeMismatch { left: inst.n(), right: clust.assignment.len() });
    }
    for c in [i, j] {
        if !clust.assignment.contains(&c) {
            return Err(Error::EmptyCluster(c));
        }
    }
    let geometry = pair_geometry_indexed(i, j, clust.centers.row(i), clust.centers.row(j))?;
    let mut s = Vec::new();
    let mut q = Vec::new();
    for (x, &c) in clust.assignment.iter().enumerate() {
        if c != i && c != j {
            continue;
        }
        let pr = geometry.from_midpoint(inst.point(x));
        s.push(if c == i { pr.along_u } else { -pr.along_u });
        q.push(pr.perp_norm);
    }
    Ok(PairPoints { geometry, s, q })
}

/// Largest `eps` with `eps * q <= s - eps * D` for every point of the two
/// clusters, i.e. `min s / (q + D)`, clamped to `[0, 0.5]`.
pub fn max_eps_pair(clust: &Clustering, inst: &Instance, i: usize, j: usize) -> Result<f64> {
    max_eps_pair_with(clust, inst, i, j, MarginSign::Signed)
}

pub fn max_eps_pair_with(clust: &Clustering, inst: &Instance, i: usize, j: usize, sign: MarginSign) -> Result<f64> {
    let pp = pair_points(clust, inst, i, j)?;
    let d = pp.geometry.dist;
    let mut eps = EPS_CAP;
    for (&s, &q) in pp.s.iter().zip(&pp.q) {
        let s = match sign {
            MarginSign::Signed if s <= 0.0 => return Ok(0.0),
            MarginSign::Signed => s,
            MarginSign::Unsigned => s.abs(),
        };
        let mut e = s / (q + d);
        // the rounded quotient can miss the inequality it solves by an ulp
        while e > 0.0 && e * q > s - e * d {
            e = e.next_down();
        }
        eps = eps.min(e);
    }
    Ok(eps.max(0.0))
}

/// Whether `x` satisfies `eps |(x-p)_V| <= <x-p, u_own> - eps D` for the pair,
/// with `u_own` pointing to the mean of the cluster named by `own_is_i`.
pub fn margin_condition(x: &[f64], g: &PairGeometry, own_is_i: bool, eps: f64) -> bool {
    let pr = g.from_midpoint(x);
    let s = if own_is_i { pr.along_u } else { -pr.along_u };
    eps * pr.perp_norm <= s - eps * g.dist
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
    /// Keys are `"i-j"` with `i < j`.
    pub per_pair: BTreeMap<String, f64>,
}

pub fn pair_key(i: usize, j: usize) -> String {
    format!("{i}-{j}")
}

pub fn eps_summary(clust: &Clustering, inst: &Instance) -> Result<EpsSummary> {
    eps_summary_with(clust, inst, MarginSign::Signed)
}

pub fn eps_summary_with(clust: &Clustering, inst: &Instance, sign: MarginSign) -> Result<EpsSummary> {
    if clust.k < 2 {
        return Err(Error::InvalidParameter("need at least two clusters".into()));
    }
    let mut per_pair = BTreeMap::new();
    let mut values = Vec::new();
    for i in 0..clust.k {
        for j in i + 1..clust.k {
            let e = max_eps_pair_with(clust, inst, i, j, sign)?;
            per_pair.insert(pair_key(i, j), e);
            values.push(e);
        }
    }
    let (min, avg, max) = min_avg_max(&values).expect("k >= 2 gives a pair");
    Ok(EpsSummary { min, avg, max, per_pair })
}

fn min_avg_max(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = values.iter().sum::<f64>() / values.len() as f64;
    Some((min, avg, max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSeparation {
    pub eps_max: f64,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub rho_over_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationProfile {
    pub per_pair: BTreeMap<String, PairSeparation>,
    /// Over pairs with a defined ratio; `None` when no pair has one.
    pub summary: Option<RatioSummary>,
    /// Every pair has a defined ratio.
    pub all_pairs_defined: bool,
    pub eps_summary: EpsSummary,
    pub beta: f64,
    pub eta: f64,
    pub eps_query: f64,
}

impl SeparationProfile {
    /// Summary shown in a table row: blank unless every pair is defined.
    pub fn row_summary(&self) -> Option<RatioSummary> {
        self.summary.filter(|_| self.all_pairs_defined)
    }
}

/// Margin `rho` and scale `Delta` each pair supports for cones of parameter
/// `eps` once the `floor(eta |C_i u C_j|)` points with the smallest apex
/// slack `s - eps q` are dropped. With `s*` the smallest remaining slack,
/// `rho = 2 s*` and `Delta = D/2 - s*`; both must be positive.
pub fn separation_profile(clust: &Clustering, inst: &Instance, eta: f64, eps: f64) -> Result<SeparationProfile> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta must lie in [0, 1), got {eta}")));
    }
    if !(eps > 0.0 && eps <= EPS_CAP) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    let eps_summary = eps_summary(clust, inst)?;
    let mut per_pair = BTreeMap::new();
    let mut ratios = Vec::new();
    for i in 0..clust.k {
        for j in i + 1..clust.k {
            let pp = pair_points(clust, inst, i, j)?;
            let mut slack: Vec<f64> = pp.s.iter().zip(&pp.q).map(|(s, q)| s - eps * q).collect();
            slack.sort_by(f64::total_cmp);
            let drop = (eta * slack.len() as f64).floor() as usize;
            let (rho, delta) = match slack.get(drop) {
                Some(&s) if s > 0.0 && pp.geometry.dist / 2.0 - s > 0.0 => {
                    (Some(2.0 * s), Some(pp.geometry.dist / 2.0 - s))
                }
                _ => (None, None),
            };
            let rho_over_delta = rho.zip(delta).map(|(r, d)| r / d);
            ratios.extend(rho_over_delta);
            per_pair.insert(
                pair_key(i, j),
                PairSeparation { eps_max: eps_summary.per_pair[&pair_key(i, j)], rho, delta, rho_over_delta },
            );
        }
    }
    let all_pairs_defined = per_pair.values().all(|p| p.rho_over_delta.is_some());
    let summary = min_avg_max(&ratios).map(|(min, avg, max)| RatioSummary { min, avg, max });
    Ok(SeparationProfile {
        per_pair,
        summary,
        all_pairs_defined,
        eps_summary,
        beta: balance(clust)?,
        eta,
        eps_query: eps,
    })
}

/// `max |C_j| / min |C_i|`.
pub fn balance(clust: &Clustering) -> Result<f64> {
    let sizes = clust.sizes();
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty));
    }
    let max = *sizes.iter().max().expect("k >= 1");
    let min = *sizes.iter().min().expect("k >= 1");
    Ok(max as f64 / min as f64)
}

/// Largest `eps` for which a radius/gap argument proves the partition stays
/// the unique optimum under every move of at most `eps * D` per point.
///
/// With every point within `r` of its own mean and points of different
/// clusters at least `b` apart, a perturbed instance keeps its planted cost
/// below `n (r + 2 delta)^2`, while any partition with a mixed part costs at
/// least `(b - 2 delta)^2 / 2`. Solving `sqrt(n)(r + 2 delta) < (b - 2 delta)/sqrt(2)`
/// for `delta = eps D` gives the bound. Returns 0 when nothing is provable.
pub fn radius_gap_aps_eps(clust: &Clustering, inst: &Instance) -> Result<f64> {
    if clust.assignment.len() != inst.n() {
        return Err(Error::SizeMismatch { left: clust.assignment.len(), right: inst.n() });
    }
    if let Some(&e) = clust.empty_clusters.first() {
        return Err(Error::EmptyCluster(e));
    }
    let k = clust.k;
    let mut big_d: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            big_d = big_d.max(dist(clust.centers.row(i), clust.centers.row(j)));
        }
    }
    let n = inst.n();
    let mut radius: f64 = 0.0;
    let mut gap = f64::INFINITY;
    for x in 0..n {
        let cx = clust.assignment[x];
        radius = radius.max(dist(inst.point(x), clust.centers.row(cx)));
        for y in x + 1..n {
            if clust.assignment[y] != cx {
                gap = gap.min(dist(inst.point(x), inst.point(y)));
            }
        }
    }
    if big_d == 0.0 || !gap.is_finite() {
        return Ok(0.0);
    }
    let rn = (n as f64).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let eps = (gap * half - rn * radius) / (2.0 * big_d * (rn + half));
    // shaved so the strict inequality survives rounding
    Ok((eps * (1.0 - 1e-9)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApsCheck {
    pub holds: bool,
    /// Perturbed points whose optimum differs from the original partition.
    pub counterexample: Option<Matrix>,
    /// Perturbations tried (targeted ones included).
    pub tried: usize,
    pub delta: f64,
}

/// Relative gap the runner-up must keep above the optimum.
pub const UNIQUENESS_GAP: f64 = 1e-9;

/// Searches for a perturbation moving every point by at most `eps * D` that
/// changes the optimal partition. `k` is the label count of `inst`, or 2
/// when unlabeled.
pub fn empirical_aps_check(inst: &Instance, eps: f64, trials: usize, seed: u64) -> Result<ApsCheck> {
    let k = match inst.label_count() {
        0 | 1 => 2,
        k => k,
    };
    empirical_aps_check_k(inst, k, eps, trials, seed)
}

pub fn empirical_aps_check_k(inst: &Instance, k: usize, eps: f64, trials: usize, seed: u64) -> Result<ApsCheck> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
    }
    let opt = brute_force_search(inst, k)?;
    let best = opt.clustering.cost;
    if let Some(runner_up) = opt.runner_up_cost {
        if runner_up - best <= UNIQUENESS_GAP * best.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotUnique { optimum: best, runner_up });
        }
    }
    let truth = &opt.clustering.assignment;
    let means = &opt.clustering.centers;
    let mut big_d: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            big_d = big_d.max(dist(means.row(i), means.row(j)));
        }
    }
    let delta = eps * big_d;
    if delta == 0.0 {
        return Ok(ApsCheck { holds: true, counterexample: None, tried: 0, delta });
    }
    let (n, d) = (inst.n(), inst.d());
    let differs = |pts: Matrix| -> Result<Option<Matrix>> {
        let perturbed = Instance::unlabeled(pts)?;
        let c = brute_force_kmeans(&perturbed, k)?;
        Ok((!same_partition(&c.assignment, truth)).then(|| perturbed.points().clone()))
    };
    let mut tried = 0;
    for pts in targeted_perturbations(inst, &opt.clustering, delta)? {
        tried += 1;
        if let Some(ce) = differs(pts)? {
            return Ok(ApsCheck { holds: false, counterexample: Some(ce), tried, delta });
        }
    }
    let mut rng = rng::seeded(seed);
    for _ in 0..trials {
        let mut data = inst.points().as_slice().to_vec();
        for i in 0..n {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let nrm = crate::instance::norm(&dir);
            if nrm == 0.0 {
                continue;
            }
            let radius = delta * rng.gen::<f64>().powf(1.0 / d as f64);
            for (t, v) in dir.iter().enumerate() {
                data[i * d + t] += radius * v / nrm;
            }
        }
        tried += 1;
        if let Some(ce) = differs(Matrix::from_vec(n, d, data)?)? {
            return Ok(ApsCheck { holds: false, counterexample: Some(ce), tried, delta });
        }
    }
    Ok(ApsCheck { holds: true, counterexample: None, tried, delta })
}

/// Per pair: both clusters pushed towards each other along the axis; and the
/// point nearest the bisector pushed across it while the rest of its cluster
/// moves sideways along that point's off-axis direction.
fn targeted_perturbations(inst: &Instance, opt: &Clustering, delta: f64) -> Result<Vec<Matrix>> {
    let d = inst.d();
    let mut out = Vec::new();
    for i in 0..opt.k {
        for j in i + 1..opt.k {
            let g = pair_geometry_indexed(i, j, opt.centers.row(i), opt.centers.row(j))?;
            let mut toward = inst.points().clone();
            for (x, &c) in opt.assignment.iter().enumerate() {
                let sign = match c {
                    c if c == i => -1.0,
                    c if c == j => 1.0,
                    _ => continue,
                };
                toward.row_mut(x).iter_mut().zip(&g.u).for_each(|(v, u)| *v += sign * delta * u);
            }
            out.push(toward);

            for (own, other_sign) in [(i, -1.0), (j, 1.0)] {
                let closest = opt
                    .assignment
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c == own)
                    .map(|(x, _)| (x, other_sign * -g.from_midpoint(inst.point(x)).along_u))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                let Some((a, _)) = closest else { continue };
                let rel: Vec<f64> = inst.point(a).iter().zip(&g.p).map(|(x, p)| x - p).collect();
                let along = crate::instance::dot(&rel, &g.u);
                let mut side: Vec<f64> = rel.iter().zip(&g.u).map(|(r, u)| r - along * u).collect();
                let side_norm = crate::instance::norm(&side);
                if side_norm > 0.0 {
                    side.iter_mut().for_each(|v| *v /= side_norm);
                }
                let mut m = inst.points().clone();
                for (x, &c) in opt.assignment.iter().enumerate() {
                    if x == a {
                        m.row_mut(x).iter_mut().zip(&g.u).for_each(|(v, u)| *v += other_sign * delta * u);
                    } else if c == own {
                        m.row_mut(x).iter_mut().zip(&side).for_each(|(v, s)| *v += delta * s);
                    }
                }
                out.push(m);
            }
        }
    }
    debug_assert!(out.iter().all(|m| m.cols() == d));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn clustering(points: &[[f64; 2]], assignment: Vec<usize>, k: usize) -> (Instance, Clustering) {
        let inst = Instance::unlabeled(Matrix::from_rows(points).unwrap()).unwrap();
        let c = Clustering::from_assignment(&inst, assignment, k).unwrap();
        (inst, c)
    }

    #[test]
    fn radius_gap_certificate() {
        let (inst, c) = clustering(&[[0.0, 0.0], [0.0, 0.2], [10.0, 0.0], [10.0, 0.2]], vec![0, 0, 1, 1], 2);
        let eps = radius_gap_aps_eps(&c, &inst).unwrap();
        let expected =
            (10.0 * std::f64::consts::FRAC_1_SQRT_2 - 2.0 * 0.1) / (20.0 * (2.0 + std::f64::consts::FRAC_1_SQRT_2));
        assert_relative_eq!(eps, expected, max_relative = 1e-8);
        assert!(empirical_aps_check_k(&inst, 2, eps, 200, 1).unwrap().holds);

        // interleaved clusters prove nothing
        let (inst, c) = clustering(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], vec![0, 1, 0, 1], 2);
        assert_eq!(radius_gap_aps_eps(&c, &inst).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_eps() {
        // means (4,0) and (0,0); the point (3,1) has s = 1, q = 1, D = 4
        let (inst, c) = clustering(&[[3.0, 1.0], [5.0, -1.0], [-2.0, 0.0], [2.0, 0.0]], vec![0, 0, 1, 1], 2);
        assert_eq!(c.centers.row(0), &[4.0, 0.0]);
        assert_eq!(c.centers.row(1), &[0.0, 0.0]);
        // the point (2,0) sits on the midpoint
        assert_eq!(max_eps_pair(&c, &inst, 0, 1).unwrap(), 0.0);

        let (inst, c) = clustering(&[[3.0, 1.0], [5.0, -1.0], [-1.0, 1.0], [1.0, -1.0]], vec![0, 0, 1, 1], 2);
        assert_relative_eq!(max_eps_pair(&c, &inst, 0, 1).unwrap(), 0.2, epsilon = 1e-15);
        let s = eps_summary(&c, &inst).unwrap();
        assert_eq!((s.min, s.avg, s.max), (s.min, s.min, s.min));
    }

    #[test]
    fn unsigned_margin_ignores_side() {
        // cluster 1 has mean 2/3, so the midpoint is 11/6 and (2,0) lies past it
        let (inst, c) = clustering(&[[3.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]], vec![0, 1, 1, 1], 2);
        assert_eq!(max_eps_pair(&c, &inst, 0, 1).unwrap(), 0.0);
        assert!(max_eps_pair_with(&c, &inst, 0, 1, MarginSign::Unsigned).unwrap() > 0.0);
    }

    #[test]
    fn eps_is_tight() {
        let (inst, c) = clustering(&[[3.0, 1.0], [5.0, -1.0], [-1.0, 1.0], [1.0, -1.0]], vec![0, 0, 1, 1], 2);
        let e = max_eps_pair(&c, &inst, 0, 1).unwrap();
        let g = pair_geometry_indexed(0, 1, c.centers.row(0), c.centers.row(1)).unwrap();
        let all = |eps: f64| (0..4).all(|x| margin_condition(inst.point(x), &g, c.assignment[x] == 0, eps));
        // the binding point meets the bound with equality, up to rounding
        assert!(all(e * (1.0 - 1e-12)));
        assert!(!all(e * (1.0 + 1e-6)));
    }

    #[test]
    fn balance_examples() {
        let (_, c) = clustering(&[[0.0, 0.0], [1.0, 0.0]], vec![0, 1], 2);
        assert_eq!(balance(&c).unwrap(), 1.0);
        let inst = Instance::from_scalars(&(0..40).map(f64::from).collect::<Vec<_>>()).unwrap();
        let a: Vec<usize> = (0..40).map(|i| usize::from(i >= 10)).collect();
        assert_eq!(balance(&Clustering::from_assignment(&inst, a, 2).unwrap()).unwrap(), 3.0);
        let a: Vec<usize> = (0..40).map(|i| usize::from(i >= 1)).collect();
        assert_eq!(balance(&Clustering::from_assignment(&inst, a, 2).unwrap()).unwrap(), 39.0);
        let e = Clustering::from_assignment(&inst, vec![0; 40], 2).unwrap();
        assert!(matches!(balance(&e), Err(Error::EmptyCluster(1))));
    }

    #[test]
    fn profile_blank_when_no_slack() {
        let (inst, c) = clustering(&[[3.0, 10.0], [5.0, -10.0], [-1.0, 10.0], [1.0, -10.0]], vec![0, 0, 1, 1], 2);
        let p = separation_profile(&c, &inst, 0.0, 0.5).unwrap();
        assert!(!p.all_pairs_defined);
        assert!(p.summary.is_none());
        assert_eq!(p.per_pair["0-1"].rho, None);
    }

    #[test]
    fn profile_on_axis_points() {
        // points on the axis: slack = s, the smallest is 1
        let (inst, c) = clustering(&[[3.0, 0.0], [5.0, 0.0], [-1.0, 0.0], [1.0, 0.0]], vec![0, 0, 1, 1], 2);
        let p = separation_profile(&c, &inst, 0.0, 0.1).unwrap();
        let pair = &p.per_pair["0-1"];
        assert_eq!(pair.rho, Some(2.0));
        assert_eq!(pair.delta, Some(1.0));
        assert_eq!(pair.rho_over_delta, Some(2.0));
        assert!(p.all_pairs_defined);
        // dropping one of four points leaves the two outer ones
        let p = separation_profile(&c, &inst, 0.25, 0.1).unwrap();
        assert_eq!(p.per_pair["0-1"].rho, Some(2.0));
        let p = separation_profile(&c, &inst, 0.5, 0.1).unwrap();
        assert_eq!(p.per_pair["0-1"].rho, None, "delta would be zero");
    }

    #[test]
    fn aps_zero_eps_holds() {
        let inst = Instance::from_scalars(&[0.0, 1.0, 10.0, 11.0]).unwrap();
        let r = empirical_aps_check(&inst, 0.0, 10, 1).unwrap();
        assert!(r.holds);
        assert_eq!(r.tried, 0);
    }

    #[test]
    fn aps_far_clusters_hold() {
        let inst = Instance::from_scalars(&[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]).unwrap();
        assert!(empirical_aps_check(&inst, 0.05, 200, 3).unwrap().holds);
    }

    #[test]
    fn aps_detects_straddling_point() {
        // 4.6 belongs to the left cluster but only barely
        let inst = Instance::from_scalars(&[0.0, 0.5, 1.0, 4.6, 9.0, 9.5, 10.0]).unwrap();
        let r = empirical_aps_check(&inst, 0.1, 100, 3).unwrap();
        assert!(!r.holds);
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn aps_rejects_ties() {
        let inst = Instance::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(empirical_aps_check(&inst, 0.1, 10, 0), Err(Error::NotUnique { .. })));
    }
}
