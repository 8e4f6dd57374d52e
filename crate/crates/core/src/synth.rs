//! Seeded generators for instances whose separation is known by construction.
//!
//! Every cluster is built from mirrored offset pairs `mu + o`, `mu - o`, so
//! its empirical mean equals the planted mean up to rounding.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_geometry, PairGeometry};
use crate::instance::{dist, dot, norm, Instance, Matrix};
use crate::rng::{self, Rng};
use crate::stability;

/// Rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Rejection sampling always tries at least this many offsets before judging the rate.
const MIN_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rho: f64,
    pub delta: f64,
    pub eps: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    /// Points with the planted labels attached.
    pub instance: Instance,
    pub truth: Vec<usize>,
    pub planted_means: Matrix,
    pub certified: Certificate,
    pub seed: u64,
}

/// Threshold on the margin that makes the threshold-graph algorithm recover a
/// separated instance: `max(2D/e^2 + 3D, (b + 1) D sqrt(1 + 1/e^2)) + D` for
/// scale `D = delta`, cone parameter `e` and balance `b`.
pub fn rho_sufficient(delta: f64, eps: f64, beta: f64) -> f64 {
    let bisector = 2.0 * delta / (eps * eps) + 3.0 * delta;
    let connectivity = (beta + 1.0) * delta * (1.0 + 1.0 / (eps * eps)).sqrt();
    bisector.max(connectivity) + delta
}

/// Margin sufficient for the degree-pruned variant run with `r` from
/// [`crate::robust::robust_params`]:
/// `max(3r, 2r + (2/e)((a+1)D/e + r), 3(a+1)D + 2(1+e)r) + D`.
pub fn rho_robust_sufficient(delta: f64, eps: f64, alpha: f64) -> f64 {
    let r = delta * (alpha + 1.0) * (1.0 + 2.0 / eps);
    let keep_apart = 3.0 * r;
    let bisector = 2.0 * r + (2.0 / eps) * ((alpha + 1.0) * delta / eps + r);
    let means_inside = 3.0 * (alpha + 1.0) * delta + 2.0 * (1.0 + eps) * r;
    keep_apart.max(bisector).max(means_inside) + delta
}

/// `k` points with pairwise distances at least `side`: a regular simplex when
/// `d >= k - 1`, otherwise a regular polygon in the first two coordinates.
fn place_means(k: usize, d: usize, side: f64) -> Result<Matrix> {
    let mut m = Matrix::zeros(k, d);
    if d + 1 >= k {
        // scaled standard basis vectors have pairwise distance sqrt(2)
        let s = side / 2f64.sqrt();
        if d >= k {
            for i in 0..k {
                m.row_mut(i)[i] = s;
            }
        } else {
            // k = d + 1: basis vectors of R^k projected onto the sum-zero hyperplane
            let basis = simplex_in(k);
            for i in 0..k {
                for t in 0..d {
                    m.row_mut(i)[t] = s * basis[i][t];
                }
            }
        }
    } else if d >= 2 {
        let radius = side / (2.0 * (std::f64::consts::PI / k as f64).sin());
        for i in 0..k {
            let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            m.row_mut(i)[0] = radius * a.cos();
            m.row_mut(i)[1] = radius * a.sin();
        }
    } else {
        for i in 0..k {
            m.row_mut(i)[0] = side * i as f64;
        }
    }
    Ok(m)
}

/// Vertices of a regular simplex with edge sqrt(2) in `k - 1` dimensions.
fn simplex_in(k: usize) -> Vec<Vec<f64>> {
    // Gram-Schmidt basis of the sum-zero hyperplane of R^k
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for t in 0..k - 1 {
        let mut v = vec![0.0; k];
        v[t] = 1.0;
        v[t + 1] = -1.0;
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nrm = norm(&v);
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            basis.iter().map(|b| dot(&e, b)).collect()
        })
        .collect()
}

fn uniform_ball(rng: &mut Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nrm = norm(&v);
        if nrm > 0.0 {
            let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
            return v.into_iter().map(|x| x * r / nrm).collect();
        }
    }
}

/// Draws `count / 2` offsets accepted by `ok` and returns them with their
/// mirrors, interleaved.
fn mirrored_offsets(
    rng: &mut Rng,
    d: usize,
    count: usize,
    radius: f64,
    ok: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        let o = if radius == 0.0 { vec![0.0; d] } else { uniform_ball(rng, d, radius) };
        if ok(&o) {
            out.push(o.iter().map(|v| -v).collect());
            out.push(o);
        } else if attempts >= MIN_ATTEMPTS && (out.len() / 2) as f64 / (attempts as f64) < MIN_ACCEPTANCE {
            return Err(Error::Infeasible(format!(
                "acceptance rate {} after {attempts} attempts",
                (out.len() / 2) as f64 / attempts as f64
            )));
        }
    }
    Ok(out)
}

fn check_eps(eps: f64, strict: bool) -> Result<()> {
    let ok = if strict { eps > 0.0 && eps < 0.5 } else { eps > 0.0 && eps <= 0.5 };
    if ok {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("no stable instance exists for eps = {eps}")))
    }
}

fn assemble(means: &Matrix, sizes: &[usize], offsets: Vec<Vec<Vec<f64>>>) -> Result<(Matrix, Vec<usize>)> {
    let d = means.cols();
    let n: usize = sizes.iter().sum();
    let mut data = Vec::with_capacity(n * d);
    let mut truth = Vec::with_capacity(n);
    for (c, offs) in offsets.into_iter().enumerate() {
        for o in offs {
            data.extend(means.row(c).iter().zip(&o).map(|(m, v)| m + v));
            truth.push(c);
        }
    }
    Ok((Matrix::from_vec(n, d, data)?, truth))
}

/// Largest cone parameter for which every point of cluster `i` lies, for all
/// `j`, in the cone with apex `mu_i - delta u_ij`; capped at 0.5.
pub fn cone_eps(inst: &Instance, truth: &[usize], means: &Matrix, delta: f64) -> Result<f64> {
    let k = means.rows();
    let mut geoms: Vec<Vec<Option<PairGeometry>>> = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                geoms[i][j] = Some(pair_geometry(means.row(i), means.row(j))?);
            }
        }
    }
    let mut eps = stability::EPS_CAP;
    for (x, &c) in truth.iter().enumerate() {
        for g in geoms[c].iter().flatten() {
            let pr = crate::geometry::project(inst.point(x), g, &g.mu_i)?;
            let along = pr.along_u + delta;
            if along <= 0.0 {
                return Ok(0.0);
            }
            if pr.perp_norm > 0.0 {
                eps = eps.min(along / pr.perp_norm);
            }
        }
    }
    Ok(eps)
}

/// Planted instance whose cluster pairs are separated with margin at least
/// `rho`, scale `delta` and cone parameter `eps`.
///
/// Means sit at pairwise distance `rho + 2 delta + 1e-3 delta` or more.
/// Offsets are drawn uniformly from the ball of radius `spread * delta` and
/// kept when the offset and its mirror both lie in every cone of the cluster.
#[allow(clippy::too_many_arguments)]
pub fn gen_separated(
    k: usize,
    d: usize,
    sizes: &[usize],
    rho: f64,
    delta: f64,
    eps: f64,
    spread: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    check_eps(eps, false)?;
    if k < 2 || d < 2 || sizes.len() != k {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2, d >= 2 and one size per cluster (k={k}, d={d}, sizes={})",
            sizes.len()
        )));
    }
    if let Some(&bad) = sizes.iter().find(|&&s| s < 4 || s % 2 != 0) {
        return Err(Error::InvalidParameter(format!("cluster sizes must be even and >= 4, got {bad}")));
    }
    if !(rho >= 0.0 && delta > 0.0 && spread >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need rho >= 0, delta > 0, spread >= 0 (rho={rho}, delta={delta}, spread={spread})"
        )));
    }
    let side = rho + 2.0 * delta + 1e-3 * delta;
    let means = place_means(k, d, side)?;
    let mut rng = rng::seeded(seed);
    let mut offsets = Vec::with_capacity(k);
    for i in 0..k {
        let axes: Vec<Vec<f64>> = (0..k)
            .filter(|&j| j != i)
            .map(|j| Ok(pair_geometry(means.row(i), means.row(j))?.u))
            .collect::<Result<_>>()?;
        // both o and -o inside the cone: |<o,u>| + eps |o_V| <= delta
        let ok = |o: &[f64]| {
            let oo = dot(o, o);
            axes.iter().all(|u| {
                let s = dot(o, u);
                let q = (oo - s * s).max(0.0).sqrt();
                s.abs() + eps * q <= delta
            })
        };
        offsets.push(mirrored_offsets(&mut rng, d, sizes[i], spread * delta, ok)?);
    }
    let (points, truth) = assemble(&means, sizes, offsets)?;
    let instance = Instance::new(points, Some(truth.clone()), format!("separated-k{k}-d{d}-s{seed}"))?;
    let mut min_d = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            min_d = min_d.min(dist(means.row(i), means.row(j)));
        }
    }
    let measured_eps = cone_eps(&instance, &truth, &means, delta)?;
    let beta = *sizes.iter().max().unwrap() as f64 / *sizes.iter().min().unwrap() as f64;
    Ok(PlantedInstance {
        instance,
        truth,
        planted_means: means,
        certified: Certificate { rho: min_d - 2.0 * delta, delta, eps: measured_eps, beta },
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum OutlierPolicy {
    /// Uniform directions at distance between `10 D` and `20 D` from the
    /// centroid of the means, `D` the largest intermean distance.
    FarUniform,
    /// Uniform in the ball of the given radius around a random pair midpoint.
    NearMargin { radius: f64 },
}

#[derive(Debug, Clone)]
pub struct OutlierInstance {
    /// Pure points first (in their original order), then the outliers.
    pub instance: Instance,
    pub pure: Vec<bool>,
    pub truth: Vec<usize>,
}

impl OutlierInstance {
    pub fn outlier_count(&self) -> usize {
        self.pure.iter().filter(|&&p| !p).count()
    }
}

pub fn inject_outliers(p: &PlantedInstance, eta: f64, policy: OutlierPolicy, seed: u64) -> Result<OutlierInstance> {
    let inst = &p.instance;
    let (n, d, k) = (inst.n(), inst.d(), p.planted_means.rows());
    let mut sizes = vec![0usize; k];
    p.truth.iter().for_each(|&c| sizes[c] += 1);
    let w_min = *sizes.iter().min().unwrap() as f64 / n as f64;
    if !(eta >= 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be non-negative, got {eta}")));
    }
    if eta >= w_min {
        return Err(Error::EtaTooLarge { eta, w_min });
    }
    let count = (eta * n as f64).floor() as usize;
    let means = &p.planted_means;
    let mut centroid = vec![0.0; d];
    for i in 0..k {
        centroid.iter_mut().zip(means.row(i)).for_each(|(c, m)| *c += m / k as f64);
    }
    let mut max_d: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            max_d = max_d.max(dist(means.row(i), means.row(j)));
        }
    }
    let mut rng = rng::seeded(seed);
    let mut data = inst.points().as_slice().to_vec();
    for _ in 0..count {
        let x: Vec<f64> = match policy {
            OutlierPolicy::FarUniform => {
                let dir = uniform_ball(&mut rng, d, 1.0);
                let nrm = norm(&dir);
                let r = max_d * rng.gen_range(10.0..20.0);
                centroid.iter().zip(&dir).map(|(c, v)| c + r * v / nrm).collect()
            }
            OutlierPolicy::NearMargin { radius } => {
                let i = rng.gen_range(0..k);
                let j = (i + rng.gen_range(1..k)) % k;
                let o = uniform_ball(&mut rng, d, radius);
                means.row(i).iter().zip(means.row(j)).zip(&o).map(|((a, b), v)| (a + b) / 2.0 + v).collect()
            }
        };
        data.extend(x);
    }
    let points = Matrix::from_vec(n + count, d, data)?;
    let mut pure = vec![true; n];
    pure.resize(n + count, false);
    Ok(OutlierInstance {
        instance: Instance::unlabeled(points)?.with_name(format!("{}+outliers", inst.name())),
        pure,
        truth: p.truth.clone(),
    })
}

/// Two clusters of `n / 2` points whose every point satisfies
/// `eps |(x-p)_V| <= <x-p, u_own> - eps D - 1e-3 D`. Means sit at `(+-5, 0, ..)`.
pub fn gen_aps2(d: usize, n: usize, eps: f64, seed: u64) -> Result<PlantedInstance> {
    check_eps(eps, true)?;
    if d < 1 || n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("need d >= 1 and even n >= 8 (d={d}, n={n})")));
    }
    let big_d = 10.0;
    // along-axis room of the own half after the margin and the slack
    let room = big_d / 2.0 - eps * big_d - 1e-3 * big_d;
    if room <= 0.0 {
        return Err(Error::Infeasible(format!("no room for eps = {eps}")));
    }
    let mut means = Matrix::zeros(2, d);
    means.row_mut(0)[0] = big_d / 2.0;
    means.row_mut(1)[0] = -big_d / 2.0;
    let mut rng = rng::seeded(seed);
    let half = n / 2;
    let sizes = [half + half % 2, half - half % 2];
    let mut offsets = Vec::new();
    for &size in &sizes {
        // offset s along the axis, q across it: |s| + eps q <= room keeps o and -o valid
        let ok = |o: &[f64]| {
            let s = o[0];
            let q = o[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            s.abs() + eps * q <= room
        };
        offsets.push(mirrored_offsets(&mut rng, d, size, room, ok)?);
    }
    let (points, truth) = assemble(&means, &sizes, offsets)?;
    let instance = Instance::new(points, Some(truth.clone()), format!("aps2-d{d}-n{n}-s{seed}"))?;
    let clustering = crate::instance::Clustering::from_assignment(&instance, truth.clone(), 2)?;
    let measured = stability::max_eps_pair(&clustering, &instance, 0, 1)?;
    Ok(PlantedInstance {
        instance,
        truth,
        planted_means: means,
        certified: Certificate {
            rho: 0.0,
            delta: (0.5 - measured) * big_d,
            eps: measured,
            beta: sizes[0].max(sizes[1]) as f64 / sizes[0].min(sizes[1]) as f64,
        },
        seed,
    })
}
