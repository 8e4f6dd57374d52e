//! Intermean coordinates for a pair of clusters and the region predicates
//! (cone, nice, core, good and their extended/robust variants).
//!
//! For clusters `i` and `j` with means `mu_i`, `mu_j` the frame is the unit
//! direction `u = (mu_i - mu_j) / |mu_i - mu_j|`, its orthogonal complement `V`
//! and the midpoint `p`. Every region is a solid of revolution about the line
//! through `p` along `u`, so membership only depends on the signed coordinate
//! along `u` and the norm of the `V` component.
//!
//! All predicates are closed sets evaluated with exact comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{norm, sq_dist, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub i: usize,
    pub j: usize,
    pub mu_i: Vec<f64>,
    pub mu_j: Vec<f64>,
    /// Unit vector from `mu_j` towards `mu_i`.
    pub u: Vec<f64>,
    /// Midpoint of the two means.
    pub p: Vec<f64>,
    /// Distance between the means.
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Signed coordinate along `u`.
    pub along_u: f64,
    /// Norm of the component orthogonal to `u`.
    pub perp_norm: f64,
}

/// Geometry of the ordered pair `(i, j)`.
pub fn pair_geometry(mu_i: &[f64], mu_j: &[f64]) -> Result<PairGeometry> {
    pair_geometry_indexed(0, 1, mu_i, mu_j)
}

pub fn pair_geometry_indexed(i: usize, j: usize, mu_i: &[f64], mu_j: &[f64]) -> Result<PairGeometry> {
    if mu_i.len() != mu_j.len() {
        return Err(Error::DimensionMismatch { expected: mu_i.len(), found: mu_j.len() });
    }
    if mu_i.iter().chain(mu_j).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCenters(format!("non-finite mean coordinate for pair ({i}, {j})")));
    }
    let diff: Vec<f64> = mu_i.iter().zip(mu_j).map(|(a, b)| a - b).collect();
    let dist = norm(&diff);
    if dist == 0.0 {
        return Err(Error::DegenerateCenters(format!("means of clusters {i} and {j} coincide")));
    }
    Ok(PairGeometry {
        i,
        j,
        mu_i: mu_i.to_vec(),
        mu_j: mu_j.to_vec(),
        u: diff.iter().map(|v| v / dist).collect(),
        p: mu_i.iter().zip(mu_j).map(|(a, b)| 0.5 * (a + b)).collect(),
        dist,
    })
}

impl PairGeometry {
    /// The same pair seen from cluster `j`.
    pub fn swapped(&self) -> PairGeometry {
        PairGeometry {
            i: self.j,
            j: self.i,
            mu_i: self.mu_j.clone(),
            mu_j: self.mu_i.clone(),
            u: self.u.iter().map(|v| -v).collect(),
            p: self.p.clone(),
            dist: self.dist,
        }
    }

    fn coords(&self, x: &[f64], origin: &[f64]) -> Projection {
        let mut along = 0.0;
        let mut sq = 0.0;
        for ((xv, ov), uv) in x.iter().zip(origin).zip(&self.u) {
            let w = xv - ov;
            along += w * uv;
            sq += w * w;
        }
        Projection { along_u: along, perp_norm: (sq - along * along).max(0.0).sqrt() }
    }

    /// Coordinates of `x` relative to the midpoint `p`.
    pub fn from_midpoint(&self, x: &[f64]) -> Projection {
        self.coords(x, &self.p)
    }

    /// Apex of the cone of cluster `i`: `mu_i - delta * u`.
    pub fn apex(&self, delta: f64) -> Vec<f64> {
        self.mu_i.iter().zip(&self.u).map(|(m, u)| m - delta * u).collect()
    }

    /// `|<x-p,u>| - eps * |(x-p)_V|`; the pair condition of the margin lemma at
    /// scale `eps` holds for `x` iff this is at least `eps * D_ij`.
    pub fn cone_slack(&self, x: &[f64], eps: f64) -> f64 {
        let pr = self.from_midpoint(x);
        pr.along_u.abs() - eps * pr.perp_norm
    }
}

/// `x` expressed in the pair frame with an arbitrary origin.
pub fn project(x: &[f64], g: &PairGeometry, origin: &[f64]) -> Result<Projection> {
    let d = g.u.len();
    for v in [x.len(), origin.len()] {
        if v != d {
            return Err(Error::DimensionMismatch { expected: d, found: v });
        }
    }
    Ok(g.coords(x, origin))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    Cone,
    Nice,
    Core,
    ExtendedNice,
    RobustNice,
    Good,
    RobustGood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionKind {
    pub tag: RegionTag,
    /// Distance from a mean to the apex of its cone.
    pub delta: f64,
    /// Cone half-angle is `atan(1 / eps)`.
    pub eps: f64,
    /// Axial extension factor of the extended regions.
    pub alpha: f64,
    /// Inflation radius of the robust regions.
    pub r: f64,
}

impl RegionKind {
    pub fn new(tag: RegionTag, delta: f64, eps: f64) -> Self {
        Self { tag, delta, eps, alpha: 1.0, r: 0.0 }
    }

    pub fn extended(tag: RegionTag, delta: f64, eps: f64, alpha: f64, r: f64) -> Self {
        Self { tag, delta, eps, alpha, r }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 0.5], got {}", self.eps)));
        }
        if !(self.delta >= 0.0) || !(self.alpha >= 1.0) || !(self.r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "region parameters out of range: delta={}, alpha={}, r={}",
                self.delta, self.alpha, self.r
            )));
        }
        Ok(())
    }

    fn pairwise_tag(&self) -> Option<RegionTag> {
        match self.tag {
            RegionTag::Good => Some(RegionTag::Nice),
            RegionTag::RobustGood => Some(RegionTag::RobustNice),
            _ => None,
        }
    }
}

/// Membership of `x` in a pairwise region of cluster `g.i` (relative to `g.j`).
///
/// `Good` and `RobustGood` intersect over every other cluster and need
/// [`PairTable::in_good_region`]; asking for them here is an error.
pub fn in_region(x: &[f64], g: &PairGeometry, kind: RegionKind) -> Result<bool> {
    kind.validate()?;
    if x.len() != g.u.len() {
        return Err(Error::DimensionMismatch { expected: g.u.len(), found: x.len() });
    }
    if kind.pairwise_tag().is_some() {
        return Err(Error::MissingPairGeometry { i: g.i, j: g.j });
    }
    Ok(in_pairwise_region(x, g, kind))
}

fn in_pairwise_region(x: &[f64], g: &PairGeometry, kind: RegionKind) -> bool {
    let RegionKind { delta, eps, alpha, r, .. } = kind;
    // coordinates relative to the apex mu_i - delta*u
    let apex = g.apex(delta);
    let c = g.coords(x, &apex);
    let in_cone = c.perp_norm <= c.along_u / eps;
    // measured from mu_i directly so that x = mu_i gives exactly 0
    let beyond_mean = g.coords(x, &g.mu_i).along_u;
    match kind.tag {
        RegionTag::Cone => in_cone,
        RegionTag::Nice => in_cone && beyond_mean <= 0.0,
        RegionTag::Core => sq_dist(x, &g.mu_i).sqrt() <= delta / eps,
        RegionTag::ExtendedNice => in_cone && beyond_mean <= alpha * delta,
        RegionTag::RobustNice => distance_to_truncated_cone(c.along_u, c.perp_norm, (alpha + 1.0) * delta, eps) <= r,
        RegionTag::Good | RegionTag::RobustGood => unreachable!("handled by the caller"),
    }
}

/// Distance from the meridian point `(s, q)` (apex-relative, `q >= 0`) to the
/// truncated cone `{0 <= q <= s / eps, s <= len}`. Its meridian section is the
/// triangle `(0,0), (len,0), (len, len/eps)`.
fn distance_to_truncated_cone(s: f64, q: f64, len: f64, eps: f64) -> f64 {
    if q <= s / eps && s <= len {
        return 0.0;
    }
    let tri = [(0.0, 0.0), (len, 0.0), (len, len / eps)];
    (0..3).map(|e| segment_distance((s, q), tri[e], tri[(e + 1) % 3])).fold(f64::INFINITY, f64::min)
}

fn segment_distance(pt: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((pt.0 - a.0) * dx + (pt.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((pt.0 - cx).powi(2) + (pt.1 - cy).powi(2)).sqrt()
}

/// The angular condition around the midpoint: the angle between `x - p` and
/// the intermean axis is below `atan(1/eps)`. `x = p` fails.
pub fn angular_margin_ok(x: &[f64], g: &PairGeometry, eps: f64) -> bool {
    let pr = g.from_midpoint(x);
    let len = pr.along_u.hypot(pr.perp_norm);
    if len == 0.0 {
        return false;
    }
    pr.along_u.abs() / len > eps / (1.0 + eps * eps).sqrt()
}

/// Pair geometries for every ordered pair of distinct cluster means.
#[derive(Debug, Clone)]
pub struct PairTable {
    k: usize,
    pairs: Vec<Option<PairGeometry>>,
}

impl PairTable {
    pub fn from_means(means: &Matrix) -> Result<Self> {
        let k = means.rows();
        let mut pairs = vec![None; k * k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    pairs[i * k + j] = Some(pair_geometry_indexed(i, j, means.row(i), means.row(j))?);
                }
            }
        }
        Ok(Self { k, pairs })
    }

    /// A table with only some pairs filled in.
    pub fn partial(k: usize, geometries: impl IntoIterator<Item = PairGeometry>) -> Self {
        let mut pairs = vec![None; k * k];
        for g in geometries {
            let (i, j) = (g.i, g.j);
            pairs[j * k + i] = Some(g.swapped());
            pairs[i * k + j] = Some(g);
        }
        Self { k, pairs }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&PairGeometry> {
        self.pairs.get(i * self.k + j).and_then(Option::as_ref)
    }

    /// Membership in `Good(i)` / `RobustGood(i)`, or any pairwise region of `(i, j)`
    /// when `kind` is pairwise (then `j` is required via [`Self::get`]).
    pub fn in_good_region(&self, x: &[f64], i: usize, kind: RegionKind) -> Result<bool> {
        kind.validate()?;
        let pair_kind = RegionKind {
            tag: kind
                .pairwise_tag()
                .ok_or_else(|| Error::InvalidParameter(format!("{:?} is not an intersection region", kind.tag)))?,
            ..kind
        };
        for j in (0..self.k).filter(|&j| j != i) {
            let g = self.get(i, j).ok_or(Error::MissingPairGeometry { i, j })?;
            if x.len() != g.u.len() {
                return Err(Error::DimensionMismatch { expected: g.u.len(), found: x.len() });
            }
            if !in_pairwise_region(x, g, pair_kind) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest intermean distance `D`.
    pub fn max_dist(&self) -> f64 {
        self.pairs.iter().flatten().map(|g| g.dist).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn axis_pair() -> PairGeometry {
        pair_geometry(&[4.0, 0.0], &[0.0, 0.0]).unwrap()
    }

    #[test]
    fn axis_aligned_geometry() {
        let g = axis_pair();
        assert_eq!(g.u, vec![1.0, 0.0]);
        assert_eq!(g.p, vec![2.0, 0.0]);
        assert_eq!(g.dist, 4.0);
    }

    #[test]
    fn coincident_means_are_degenerate() {
        assert!(matches!(pair_geometry(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::DegenerateCenters(_))));
        assert!(matches!(pair_geometry(&[f64::INFINITY, 0.0], &[0.0, 0.0]), Err(Error::DegenerateCenters(_))));
    }

    #[test]
    fn diagonal_geometry() {
        let g = pair_geometry(&[1.0, 1.0], &[-1.0, -1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(g.u[0], h, epsilon = 1e-15);
        assert_relative_eq!(g.u[1], h, epsilon = 1e-15);
        assert_eq!(g.p, vec![0.0, 0.0]);
        assert_relative_eq!(g.dist, 2.0 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn swapping_negates_direction() {
        let g = pair_geometry(&[3.0, -1.0, 2.0], &[0.5, 4.0, 1.0]).unwrap();
        let s = g.swapped();
        assert_eq!(s.p, g.p);
        assert_eq!(s.dist, g.dist);
        for (a, b) in s.u.iter().zip(&g.u) {
            assert_eq!(*a, -*b);
        }
        let direct = pair_geometry(&g.mu_j, &g.mu_i).unwrap();
        for (a, b) in s.u.iter().zip(&direct.u) {
            assert_relative_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_examples() {
        let g = axis_pair();
        let p = project(&[3.0, 1.0], &g, &[2.0, 0.0]).unwrap();
        assert_eq!((p.along_u, p.perp_norm), (1.0, 1.0));
        let p = project(&[2.0, 0.0], &g, &[2.0, 0.0]).unwrap();
        assert_eq!((p.along_u, p.perp_norm), (0.0, 0.0));
        let p = project(&[2.0, 5.0], &g, &[2.0, 0.0]).unwrap();
        assert_eq!((p.along_u, p.perp_norm), (0.0, 5.0));
        assert!(matches!(project(&[1.0], &g, &[2.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn region_examples() {
        let g = axis_pair();
        let core = RegionKind::new(RegionTag::Core, 1.0, 0.5);
        let nice = RegionKind::new(RegionTag::Nice, 1.0, 0.5);
        let cone = RegionKind::new(RegionTag::Cone, 1.0, 0.5);
        assert!(in_region(&[4.0, 0.0], &g, core).unwrap());
        assert!(in_region(&[3.0, 0.0], &g, nice).unwrap());
        assert!(!in_region(&[3.0, 10.0], &g, cone).unwrap());
        // beyond the mean is outside Nice but inside the cone
        assert!(in_region(&[5.0, 0.0], &g, cone).unwrap());
        assert!(!in_region(&[5.0, 0.0], &g, nice).unwrap());
    }

    #[test]
    fn good_regions_need_the_table() {
        let g = axis_pair();
        let good = RegionKind::new(RegionTag::Good, 1.0, 0.5);
        assert!(matches!(in_region(&[4.0, 0.0], &g, good), Err(Error::MissingPairGeometry { .. })));
        let means = Matrix::from_rows(&[[4.0, 0.0], [0.0, 0.0], [2.0, 9.0]]).unwrap();
        let full = PairTable::from_means(&means).unwrap();
        assert!(full.in_good_region(&[4.0, 0.0], 0, good).unwrap());
        let partial = PairTable::partial(3, [g]);
        assert!(matches!(partial.in_good_region(&[4.0, 0.0], 0, good), Err(Error::MissingPairGeometry { i: 0, j: 2 })));
    }

    #[test]
    fn eps_out_of_range_is_rejected() {
        let g = axis_pair();
        let bad = RegionKind::new(RegionTag::Cone, 1.0, 0.6);
        assert!(in_region(&[4.0, 0.0], &g, bad).is_err());
    }

    #[test]
    fn robust_nice_distance_examples() {
        let g = axis_pair();
        // apex at (3,0); extended-nice reaches (alpha+1)*delta = 3 along u from the apex
        let enice = RegionKind::extended(RegionTag::ExtendedNice, 1.0, 0.5, 2.0, 0.0);
        assert!(in_region(&[6.0, 0.0], &g, enice).unwrap());
        assert!(!in_region(&[6.5, 0.0], &g, enice).unwrap());
        let rn = |r| RegionKind::extended(RegionTag::RobustNice, 1.0, 0.5, 2.0, r);
        assert!(in_region(&[6.5, 0.0], &g, rn(0.5)).unwrap());
        assert!(!in_region(&[6.5, 0.0], &g, rn(0.49)).unwrap());
        // behind the apex the closest point is the apex itself
        assert!(in_region(&[2.0, 0.0], &g, rn(1.0)).unwrap());
        assert!(!in_region(&[2.0, 0.0], &g, rn(0.99)).unwrap());
        // perpendicular to the slanted face q = 2 s through the apex
        let x = [3.0 - 2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
        assert!(in_region(&x, &g, rn(1.0 + 1e-12)).unwrap());
        assert!(!in_region(&x, &g, rn(0.999)).unwrap());
    }

    #[test]
    fn angular_margin_examples() {
        let g = axis_pair();
        assert!(angular_margin_ok(&[7.0, 0.0], &g, 0.5));
        assert!(!angular_margin_ok(&[2.0, 3.0], &g, 0.5));
        assert!(!angular_margin_ok(&[2.0, 0.0], &g, 0.5));
        assert!(angular_margin_ok(&[3.0, 1.0], &g, 0.5));
    }
}
