//! Seeded property suites over generated instances.
//!
//! Each suite runs `cases` independent cases; case `s` uses seed
//! `base_seed + s` and picks its parameters from a fixed cycle indexed by `s`,
//! so any failure replays from its case number alone.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_margin_ok, in_region, pair_geometry, PairTable, RegionKind, RegionTag};
use crate::instance::{dist, dot, norm, same_partition, Clustering, Instance, Matrix};
use crate::kmeans::{self, brute_force_kmeans};
use crate::perceptron::{self, CandidateBudget, C1};
use crate::rng;
use crate::robust;
use crate::stability;
use crate::stable;
use crate::synth::{self, OutlierPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Exact recovery of separated instances by the threshold sweep.
    Separated,
    /// Exact recovery of the pure points with far outliers added.
    Robust,
    /// Mistake bound, pair distance bounds and margin of the lifted separator.
    Perceptron,
    /// The margin inequality implies the angular condition.
    Cone,
    /// The perturbation check on tiny instances.
    Aps,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Separated, Suite::Robust, Suite::Perceptron, Suite::Cone, Suite::Aps];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Separated => "separated",
            Suite::Robust => "robust",
            Suite::Perceptron => "perceptron",
            Suite::Cone => "cone",
            Suite::Aps => "aps",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    /// Accepts the short names and the long names used in published run scripts.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separated" | "theorem51" => Ok(Suite::Separated),
            "robust" | "robust_theorem" => Ok(Suite::Robust),
            "perceptron" => Ok(Suite::Perceptron),
            "cone" | "lemma34" => Ok(Suite::Cone),
            "aps" | "aps_check" => Ok(Suite::Aps),
            other => Err(Error::UnknownSuite(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case: usize,
    pub seed: u64,
    pub check: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub base_seed: u64,
    /// How many times each named check ran.
    pub checks: BTreeMap<String, usize>,
    /// Sorted by case.
    pub failures: Vec<CaseFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failing_cases(&self) -> usize {
        let mut cases: Vec<usize> = self.failures.iter().map(|f| f.case).collect();
        cases.dedup();
        cases.len()
    }

    /// Failures of one named check.
    pub fn failures_of<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a CaseFailure> + 'a {
        self.failures.iter().filter(move |f| f.check == check)
    }
}

/// Outcome of one case: which checks ran and which failed.
#[derive(Debug, Default)]
struct CaseLog {
    ran: Vec<&'static str>,
    failed: Vec<(&'static str, String)>,
}

impl CaseLog {
    fn check(&mut self, name: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        self.ran.push(name);
        if !ok {
            self.failed.push((name, detail()));
        }
    }

    /// Records an error from the library as a failure of `name`.
    fn attempt<T>(&mut self, name: &'static str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.ran.push(name);
                self.failed.push((name, e.to_string()));
                None
            }
        }
    }
}

pub fn run_suite(suite: Suite, cases: usize, base_seed: u64) -> SuiteReport {
    let logs: Vec<CaseLog> = (0..cases)
        .into_par_iter()
        .map(|s| {
            let seed = base_seed.wrapping_add(s as u64);
            let mut log = CaseLog::default();
            match suite {
                Suite::Separated => separated_case(s, seed, &mut log),
                Suite::Robust => robust_case(s, seed, &mut log),
                Suite::Perceptron => perceptron_case(s, seed, &mut log),
                Suite::Cone => cone_case(s, seed, &mut log),
                Suite::Aps => aps_case(s, seed, &mut log),
            }
            log
        })
        .collect();
    let mut checks = BTreeMap::new();
    let mut failures = Vec::new();
    for (s, log) in logs.into_iter().enumerate() {
        for name in log.ran {
            *checks.entry(name.to_string()).or_insert(0) += 1;
        }
        for (check, message) in log.failed {
            failures.push(CaseFailure {
                case: s,
                seed: base_seed.wrapping_add(s as u64),
                check: check.to_string(),
                message,
            });
        }
    }
    SuiteReport { suite, cases, base_seed, checks, failures }
}

/// Parameters of case `s` of the separated suite: `(k, d, beta, eps)`.
pub fn separated_params(s: usize) -> (usize, usize, f64, f64) {
    let k = [2, 3, 5][s % 3];
    let d = [2, 8][(s / 3) % 2];
    let beta = [1.0, 3.0][(s / 6) % 2];
    let eps = [0.2, 0.4][(s / 12) % 2];
    (k, d, beta, eps)
}

fn separated_case(s: usize, seed: u64, log: &mut CaseLog) {
    let (k, d, beta, eps) = separated_params(s);
    let base = 8;
    let mut sizes = vec![base; k];
    sizes[0] = base * beta as usize;
    let delta = 1.0;
    let rho = synth::rho_sufficient(delta, eps, beta);
    let Some(p) = log.attempt("generate", synth::gen_separated(k, d, &sizes, rho, delta, eps, 1.0, seed)) else {
        return;
    };
    log.check("certificate", p.certified.rho >= rho && p.certified.eps >= eps, || {
        format!("certified rho {} eps {} below requested {rho} {eps}", p.certified.rho, p.certified.eps)
    });
    let inst = &p.instance;
    if let Some(c) = log.attempt("recovery", stable::cluster(inst, k)) {
        log.check("recovery", c.same_partition(&p.truth), || {
            format!("partition differs from the planted one (cost {})", c.cost)
        });
        if let Some(cl) = log.attempt(
            "lloyd_fixed_point",
            stable::cluster_then_lloyd(inst, k, kmeans::DEFAULT_TOL, kmeans::DEFAULT_MAX_ITER),
        ) {
            log.check("lloyd_fixed_point", cl.assignment == c.assignment, || {
                "one Lloyd pass from the sweep seeds changed the assignment".into()
            });
        }
    }
    // at r = rho every component stays inside one planted cluster
    let mut forest = stable::components_at(inst, rho);
    let labels = forest.root_labels();
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let pure = labels.iter().zip(&p.truth).all(|(&root, &t)| *owner.entry(root).or_insert(t) == t);
    log.check("component_purity", pure, || format!("a component at r = {rho} mixes planted clusters"));
}

/// Parameters of case `s` of the robust suite: `(eta, k, d, eps)`.
pub fn robust_params_for_case(s: usize) -> (f64, usize, usize, f64) {
    let eta = [0.02, 0.05][s % 2];
    let k = [2, 3][(s / 2) % 2];
    let d = [2, 8][(s / 4) % 2];
    let eps = [0.2, 0.4][(s / 8) % 2];
    (eta, k, d, eps)
}

fn robust_case(s: usize, seed: u64, log: &mut CaseLog) {
    let (eta, k, d, eps) = robust_params_for_case(s);
    let size = 50;
    let n = size * k;
    let w = 1.0 / k as f64;
    let delta = 1.0;
    let Some(params) = log.attempt("generate", robust::robust_params(delta, eps, w, w, eta, n)) else {
        return;
    };
    let rho = synth::rho_robust_sufficient(delta, eps, params.alpha);
    let Some(p) = log.attempt("generate", synth::gen_separated(k, d, &vec![size; k], rho, delta, eps, 1.0, seed))
    else {
        return;
    };
    let Some(o) =
        log.attempt("generate", synth::inject_outliers(&p, eta, OutlierPolicy::FarUniform, seed ^ 0x9e37_79b9))
    else {
        return;
    };
    log.check("outlier_count", o.outlier_count() == (eta * n as f64).floor() as usize, || {
        format!("{} outliers for eta = {eta}, n = {n}", o.outlier_count())
    });
    let inst = &o.instance;
    let Some((c, trace)) = log.attempt("recovery", robust::robust_seeds_and_cluster(inst, k, params.r, params.t))
    else {
        return;
    };
    let pure_assignment: Vec<usize> = c.assignment.iter().zip(&o.pure).filter(|(_, &p)| p).map(|(&a, _)| a).collect();
    log.check("recovery", same_partition(&pure_assignment, &o.truth), || "pure points are not split as planted".into());

    let table = match PairTable::from_means(&p.planted_means) {
        Ok(t) => t,
        Err(e) => return log.check("geometry", false, || e.to_string()),
    };
    let enice = RegionKind::extended(RegionTag::ExtendedNice, delta, eps, params.alpha, params.r);
    let mut alive = vec![false; inst.n()];
    trace.survivors.iter().for_each(|&i| alive[i] = true);
    let mut lost = None;
    for (x, &label) in o.truth.iter().enumerate() {
        let inside = (0..k)
            .filter(|&j| j != label)
            .all(|j| table.get(label, j).is_some_and(|g| in_region(inst.point(x), g, enice).unwrap_or(false)));
        if inside && !alive[x] {
            lost = Some(x);
            break;
        }
    }
    log.check("extended_nice_survive", lost.is_none(), || format!("point {lost:?} pruned"));

    let mut seen = vec![false; k];
    let mut pure_distinct = trace.top_components.len() == k;
    for comp in &trace.top_components {
        let first = comp.first().copied();
        let label = first.filter(|&x| o.pure[x]).map(|x| o.truth[x]);
        match label {
            Some(l) if !seen[l] && comp.iter().all(|&x| o.pure[x] && o.truth[x] == l) => seen[l] = true,
            _ => pure_distinct = false,
        }
    }
    log.check("components_pure_distinct", pure_distinct, || {
        "largest components are not pure with distinct labels".into()
    });

    if pure_distinct {
        let rgood = RegionKind::extended(RegionTag::RobustGood, delta, eps, params.alpha, params.r);
        let mut outside = None;
        for (row, comp) in trace.top_components.iter().enumerate() {
            let label = o.truth[comp[0]];
            if !table.in_good_region(trace.seeds.row(row), label, rgood).unwrap_or(false) {
                outside = Some(label);
            }
        }
        log.check("means_robust_good", outside.is_none(), || {
            format!("component mean of cluster {outside:?} outside its robust good region")
        });
    }
}

fn perceptron_case(s: usize, seed: u64, log: &mut CaseLog) {
    mistake_bound_case(s, seed, log);
    if s.is_multiple_of(10) {
        lifted_margin_case(s / 10, seed, log);
    }
    if s.is_multiple_of(20) {
        exhaustive_match_case(s / 20, seed, log);
    }
}

/// Random unit-ball samples labeled by a random separator, dropping those
/// within normalized margin `0.02` of it.
fn mistake_bound_case(s: usize, seed: u64, log: &mut CaseLog) {
    let d = 2 + s % 4;
    let mut rng = rng::substream(seed, 1);
    let w_star: Vec<f64> = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nrm = norm(&v);
        if nrm > 1e-3 {
            break v.into_iter().map(|x| x / nrm).collect();
        }
    };
    let mut samples = Vec::new();
    while samples.len() < 20 {
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (ny, side) = (norm(&y), dot(&y, &w_star));
        if ny > 1e-6 && side.abs() / ny >= 0.02 {
            samples.push((y, if side >= 0.0 { 1i8 } else { -1 }));
        }
    }
    let gamma = perceptron::separator_margin(&samples, &w_star);
    let bound = (1.0 / (gamma * gamma)).ceil() as usize;
    if let Some(run) = log.attempt("mistake_bound", perceptron::perceptron_run(&samples, bound + 2)) {
        log.check("mistake_bound", run.converged && run.mistakes <= bound, || {
            format!("{} mistakes (converged: {}) against bound {bound}", run.mistakes, run.converged)
        });
    }
}

const APS2_EPS: [f64; 3] = [0.2, 0.3, 0.45];

fn lifted_margin_case(m: usize, seed: u64, log: &mut CaseLog) {
    let eps = APS2_EPS[m % 3];
    let d = 2 + (m / 3) % 3;
    let n = 8 + 2 * ((m / 9) % 5);
    let Some(p) = log.attempt("generate", synth::gen_aps2(d, n, eps, seed)) else {
        return;
    };
    let inst = &p.instance;
    let Some(c) = log.attempt("pair_bounds", Clustering::from_assignment(inst, p.truth.clone(), 2)) else {
        return;
    };
    let Some(g) = log.attempt("pair_bounds", pair_geometry(c.centers.row(0), c.centers.row(1))) else {
        return;
    };
    let Some((a, b)) = perceptron::closest_to_bisector(inst, &p.truth, &g) else {
        return log.check("pair_bounds", false, || "no pair found".into());
    };
    let gap = dist(inst.point(a), inst.point(b));
    let big_d = g.dist;
    let upper = ((1.0 + eps * eps) / (eps * eps)).sqrt() * big_d;
    log.check("pair_bounds", 2.0 * eps * big_d <= gap && gap <= upper, || {
        format!("|a - b| = {gap} outside [{}, {upper}]", 2.0 * eps * big_d)
    });
    let Some(lifted) = log.attempt("lifted_margin", perceptron::lift(inst, a, b)) else {
        return;
    };
    if let Some((w, samples)) = log.attempt("lifted_margin", perceptron::reference_separator(&lifted, &p.truth)) {
        let gamma = perceptron::separator_margin(&samples, &w);
        let floor = C1 * eps.powi(4);
        log.check("lifted_margin", gamma >= floor, || format!("margin {gamma} below {floor}"));
    }
}

fn exhaustive_match_case(m: usize, seed: u64, log: &mut CaseLog) {
    let eps = APS2_EPS[m % 3];
    let n = 8 + 2 * ((m / 3) % 4);
    let Some(p) = log.attempt("generate", synth::gen_aps2(2, n, eps, seed)) else {
        return;
    };
    let inst = &p.instance;
    let found = log.attempt("two_means_optimal", perceptron::cluster2(inst, CandidateBudget::with_size(3)));
    let best = log.attempt("two_means_optimal", brute_force_kmeans(inst, 2));
    if let (Some(found), Some(best)) = (found, best) {
        log.check("two_means_optimal", found.same_partition(&best.assignment), || {
            format!("cost {} vs optimum {}", found.cost, best.cost)
        });
    }
}

fn cone_case(s: usize, seed: u64, log: &mut CaseLog) {
    let mut rng = rng::substream(seed, 2);
    let d = [2, 3, 5][s % 3];
    let mu_i: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mu_j: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let Some(g) = log.attempt("generate", pair_geometry(&mu_i, &mu_j)) else {
        return;
    };
    let eps = rng.gen_range(0.01..0.5);
    let half = 3.0 * g.dist;
    let (mut accepted, mut violation) = (0, None);
    for _ in 0..20_000 {
        if accepted == 200 {
            break;
        }
        let x: Vec<f64> = g.p.iter().map(|c| c + rng.gen_range(-half..half)).collect();
        let own_is_i = dot(&x, &g.u) >= dot(&g.p, &g.u);
        if !stability::margin_condition(&x, &g, own_is_i, eps) {
            continue;
        }
        accepted += 1;
        if !angular_margin_ok(&x, &g, eps) {
            violation = Some(x);
        }
    }
    log.check("margin_implies_angle", violation.is_none(), || {
        format!("point {violation:?} meets the margin but not the angle at eps {eps}")
    });

    let req = APS2_EPS[s % 3];
    if let Some(p) = log.attempt("certificate", synth::gen_aps2(d, 8 + 2 * (s % 4), req, seed)) {
        log.check("certificate", p.certified.eps >= req, || {
            format!("certified {} below requested {req}", p.certified.eps)
        });
    }
}

pub const APS_TRIALS: usize = 1000;

/// Two tight planted clusters on a tiny instance, checked at the
/// radius/gap certificate.
fn aps_case(s: usize, seed: u64, log: &mut CaseLog) {
    let sizes: &[usize] = [&[4, 4][..], &[4, 6], &[6, 6]][s % 3];
    let k = sizes.len();
    let spread = [0.3, 0.5][(s / 3) % 2];
    if let Some(p) = log.attempt("stable_at_certified", synth::gen_separated(k, 2, sizes, 8.0, 1.0, 0.5, spread, seed))
    {
        let certified = Clustering::from_assignment(&p.instance, p.truth.clone(), k)
            .and_then(|c| stability::radius_gap_aps_eps(&c, &p.instance));
        if let Some(eps) = log.attempt("stable_at_certified", certified) {
            log.check("certificate_positive", eps > 0.0, || "radius/gap certificate is empty".into());
            let check = stability::empirical_aps_check(&p.instance, eps, APS_TRIALS, seed);
            if let Some(check) = log.attempt("stable_at_certified", check) {
                log.check("stable_at_certified", check.holds, || {
                    format!("counterexample after {} trials at eps {eps}", check.tried)
                });
            }
        }
    }
    if s % 5 < 2 {
        let inst = straddling_instance(seed);
        if let Some(check) =
            log.attempt("straddler_found", stability::empirical_aps_check(&inst, 0.15, APS_TRIALS, seed))
        {
            log.check("straddler_found", !check.holds, || format!("no counterexample in {} trials", check.tried));
        }
    }
}

/// Two tight groups around `(+-5, 0)` plus one point just on the positive
/// side of the bisector, which a move of `0.15 D` carries across it.
pub fn straddling_instance(seed: u64) -> Instance {
    let mut rng = rng::substream(seed, 3);
    let mut rows = Vec::new();
    for sign in [1.0, -1.0] {
        for _ in 0..4 {
            rows.push(vec![sign * 5.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)]);
        }
    }
    rows.push(vec![rng.gen_range(0.1..0.5), rng.gen_range(-0.3..0.3)]);
    let points = Matrix::from_rows(&rows).expect("rows share a width");
    Instance::unlabeled(points).expect("finite points").with_name(format!("straddle-s{seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("theorem51".parse::<Suite>().unwrap(), Suite::Separated);
        assert!(matches!("nope".parse::<Suite>(), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn small_runs_pass() {
        for s in Suite::ALL {
            let r = run_suite(s, 4, 7);
            assert!(r.passed(), "{s}: {:?}", r.failures);
            assert!(!r.checks.is_empty());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        assert_eq!(run_suite(Suite::Separated, 6, 3), run_suite(Suite::Separated, 6, 3));
    }
}
