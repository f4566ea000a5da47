//! Sphere-sweep estimation of the asymptotic nonregular values of a map.
//!
//! For each center `a`, the Milnor curve of `(f, rho_a)` is intersected with
//! spheres of geometrically growing radius. Intersection points are linked
//! into branches across radii, branches with Cauchy `f`-values yield limit
//! clusters, and clusters are intersected across centers. Every reported
//! cluster carries Rabier-audit evidence (`|x| * nu(Df)` along the branch).
//! Membership in a cluster is an estimate, never a proof: a finite sample of
//! centers and radii cannot certify the infinite intersection.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arcspace::degree_bound;
use crate::diffgeo::{jacobian, milnor_system, sing_system, CenterSpec, SingSystem};
use crate::error::{Error, Result};
use crate::poly::{PolyMap, Rational, SparsePoly};
use crate::rabier::{nu, RealMatrix};
use crate::realsolve::{curve_sphere_intersect, SphereSlice};

/// Fixed disclaimer attached to every report.
pub const DISCLAIMER: &str = "Estimates only: the reported sets are finite-sample candidates for \
S_infinity / NS_infinity. A finite choice of centers and radii cannot certify the intersection \
over all centers, and the bifurcation set at infinity B_infinity itself is not computed here.";

/// Geometric radius schedule `R_k = r0 * ratio^k`, `k = 0..steps`.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusSchedule {
    pub r0: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl RadiusSchedule {
    pub fn new(r0: f64, ratio: f64, steps: usize) -> Result<Self> {
        if !(r0 > 0.0 && ratio > 1.0 && steps >= 4) {
            return Err(Error::InvalidDimensions(
                "radius schedule needs r0 > 0, ratio > 1 and at least 4 steps".to_string(),
            ));
        }
        Ok(RadiusSchedule { r0, ratio, steps })
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|k| self.r0 * self.ratio.powi(k as i32))
            .collect()
    }
}

/// Tolerances, thresholds and seeding for a detection run.
#[derive(Clone, Debug, Serialize)]
pub struct DetectSettings {
    /// Cauchy / clustering tolerance on limit values.
    pub cluster_tol: f64,
    /// Tolerance for matching cluster values across centers.
    pub match_tol: f64,
    /// Branches whose normalized singular-minor score drops below this at
    /// any radius are flagged trivial (near `Sing f`).
    pub sing_threshold: f64,
    /// Rabier-audit threshold on `|x| * nu(Df)` at the largest radius.
    pub audit_tol: f64,
    /// Trailing window (in radii) for Cauchy, monotonicity and audit trends.
    pub window: usize,
    pub seed: u64,
    /// Seeded random centers drawn uniformly from `[-10, 10]^n`.
    pub random_centers: usize,
    /// Points per circle when a degenerate Milnor system forces sampling.
    pub fallback_samples: usize,
    /// Multistart seeds per sphere for the numeric continuation fallback
    /// (n >= 3).
    pub continuation_starts: usize,
}

impl Default for DetectSettings {
    fn default() -> Self {
        DetectSettings {
            cluster_tol: 1e-3,
            match_tol: 1e-3,
            sing_threshold: 1e-6,
            audit_tol: 1e-3,
            window: 3,
            seed: 0,
            random_centers: 5,
            fallback_samples: 64,
            continuation_starts: 128,
        }
    }
}

/// How the per-center point sets were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CenterMode {
    /// Exact bivariate elimination with certified residuals.
    Exact,
    /// Degenerate Milnor system: whole-circle sampling, no exactness claims.
    SampledFallback,
    /// Numeric predictor-corrector continuation (n >= 3), no exactness
    /// claims.
    Continuation,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackPoint {
    pub step: usize,
    pub radius: f64,
    pub point: Vec<f64>,
    pub f_value: Vec<f64>,
    /// Scale-free proximity to `Sing f` (0 on the singular set).
    pub sing_score: f64,
}

/// A branch: intersection points linked across consecutive radii.
#[derive(Clone, Debug, Serialize)]
pub struct BranchTrack {
    pub id: usize,
    pub points: Vec<TrackPoint>,
}

impl BranchTrack {
    fn last_step(&self) -> usize {
        self.points.last().map(|p| p.step).unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCluster {
    pub value: Vec<f64>,
    pub members: Vec<usize>,
    pub spread: f64,
    /// All member branches stay away from `Sing f` at every sampled radius.
    pub nontrivial: bool,
}

/// Rabier-audit evidence along one branch.
#[derive(Clone, Debug, Serialize)]
pub struct AuditRecord {
    pub branch: usize,
    pub products: Vec<f64>,
    pub last_product: f64,
    pub decreasing: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterAudit {
    pub cluster_index: usize,
    pub records: Vec<AuditRecord>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CenterReport {
    pub center: Vec<f64>,
    pub mode: CenterMode,
    pub degenerate: bool,
    pub branches: Vec<BranchTrack>,
    pub clusters: Vec<LimitCluster>,
    pub audits: Vec<ClusterAudit>,
}

/// A value surviving the intersection across centers.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateEntry {
    pub value: Vec<f64>,
    /// Matched cluster value at each center, in center order.
    pub per_center: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    pub tool_version: String,
    pub map: Vec<String>,
    pub vars: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub d: u32,
    pub s: Option<u64>,
    pub schedule: RadiusSchedule,
    pub settings: DetectSettings,
    pub disclaimer: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectionReport {
    pub meta: ReportMeta,
    pub centers: Vec<CenterReport>,
    pub s_infty: Vec<EstimateEntry>,
    pub ns_infty: Vec<EstimateEntry>,
}

// ---------------------------------------------------------------------------
// Per-center sweep
// ---------------------------------------------------------------------------

struct RawPoint {
    point: Vec<f64>,
    f_value: Vec<f64>,
    sing_score: f64,
}

fn collect_points_exact(
    milnor_eq: &SparsePoly,
    f: &PolyMap,
    sing: &SingSystem,
    center: &[Rational],
    radius: &Rational,
) -> Result<Option<Vec<RawPoint>>> {
    match curve_sphere_intersect(milnor_eq, center, radius)? {
        SphereSlice::Degenerate(_) => Ok(None),
        SphereSlice::Points(points) => {
            let mut out = Vec::with_capacity(points.len());
            for p in points {
                let point = vec![p.x, p.y];
                let f_value = f.eval_f64(&point)?;
                let sing_score = sing.proximity_score(&point);
                out.push(RawPoint {
                    point,
                    f_value,
                    sing_score,
                });
            }
            Ok(Some(out))
        }
    }
}

fn collect_points_sampled(
    f: &PolyMap,
    sing: &SingSystem,
    center: &[f64],
    radius: f64,
    samples: usize,
) -> Result<Vec<RawPoint>> {
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (samples as f64);
        let point = vec![
            center[0] + radius * theta.cos(),
            center[1] + radius * theta.sin(),
        ];
        let f_value = f.eval_f64(&point)?;
        let sing_score = sing.proximity_score(&point);
        out.push(RawPoint {
            point,
            f_value,
            sing_score,
        });
    }
    Ok(out)
}

/// Damped Gauss-Newton on the Milnor equations restricted to a sphere, with
/// relative (cancellation-normalized) residuals. Numeric only.
fn continuation_solve(
    eqs: &[SparsePoly],
    derivs: &[Vec<SparsePoly>],
    center: &[f64],
    radius: f64,
    start: &[f64],
) -> Option<Vec<f64>> {
    let n = center.len();
    let m = eqs.len() + 1;
    let mut x = start.to_vec();
    let mut damping = 1e-6;
    for _ in 0..60 {
        let mut residual = nalgebra::DVector::zeros(m);
        let mut jac = nalgebra::DMatrix::zeros(m, n);
        let mut worst: f64 = 0.0;
        for (row, eq) in eqs.iter().enumerate() {
            let (value, magnitude) = eq.eval_f64_with_magnitude(&x);
            let scale = magnitude.max(1e-300);
            residual[row] = value / scale;
            worst = worst.max(residual[row].abs());
            for (col, d) in derivs[row].iter().enumerate() {
                jac[(row, col)] = d.eval_f64(&x).unwrap_or(f64::NAN) / scale;
            }
        }
        let rho: f64 = x
            .iter()
            .zip(center.iter())
            .map(|(xi, ai)| (xi - ai) * (xi - ai))
            .sum();
        let sphere_scale = radius * radius;
        residual[m - 1] = (rho - sphere_scale) / sphere_scale;
        worst = worst.max(residual[m - 1].abs());
        for col in 0..n {
            jac[(m - 1, col)] = 2.0 * (x[col] - center[col]) / sphere_scale;
        }
        if worst < 1e-9 {
            return Some(x);
        }
        if !residual.iter().all(|v| v.is_finite()) {
            return None;
        }
        let jt = jac.transpose();
        let mut a = &jt * &jac;
        let g = &jt * &residual;
        for i in 0..n {
            a[(i, i)] += damping + 1e-14;
        }
        match a.cholesky() {
            Some(chol) => {
                let delta = chol.solve(&(-&g));
                for i in 0..n {
                    x[i] += delta[i];
                }
                damping = (damping * 0.5).max(1e-12);
            }
            None => {
                damping *= 10.0;
                if damping > 1e6 {
                    return None;
                }
            }
        }
    }
    None
}

fn collect_points_continuation(
    f: &PolyMap,
    eqs: &[SparsePoly],
    sing: &SingSystem,
    center: &[f64],
    radius: f64,
    seeds: &[Vec<f64>],
    fresh: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RawPoint>> {
    let n = center.len();
    let derivs: Vec<Vec<SparsePoly>> = eqs
        .iter()
        .map(|e| (0..n).map(|j| e.partial_derivative(j).unwrap()).collect())
        .collect();
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();
    for _ in 0..fresh {
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        for (i, d) in dir.iter_mut().enumerate() {
            *d = center[i] + radius * *d / norm;
        }
        starts.push(dir);
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for start in &starts {
        if let Some(x) = continuation_solve(eqs, &derivs, center, radius, start) {
            let tol = 1e-6 * (1.0 + radius);
            let duplicate = found.iter().any(|y| {
                y.iter()
                    .zip(x.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < tol
            });
            if !duplicate {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = Vec::with_capacity(found.len());
    for point in found {
        let f_value = f.eval_f64(&point)?;
        let sing_score = sing.proximity_score(&point);
        out.push(RawPoint {
            point,
            f_value,
            sing_score,
        });
    }
    Ok(out)
}

fn feature(center: &[f64], radius: f64, p: &RawPoint) -> Vec<f64> {
    let mut v: Vec<f64> = p
        .point
        .iter()
        .zip(center.iter())
        .map(|(x, a)| (x - a) / radius)
        .collect();
    v.extend(p.f_value.iter().map(|x| x.clamp(-1e15, 1e15)));
    v
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Greedy nearest-neighbor linking of per-radius points into branches; ties
/// break by (branch id, point index).
fn link_branches(
    center: &[f64],
    radii: &[f64],
    per_radius: Vec<Vec<RawPoint>>,
) -> Vec<BranchTrack> {
    let mut branches: Vec<BranchTrack> = Vec::new();
    for (step, (points, &radius)) in per_radius.into_iter().zip(radii.iter()).enumerate() {
        let features: Vec<Vec<f64>> = points
            .iter()
            .map(|p| feature(center, radius, p))
            .collect();
        // candidate links from branches alive at the previous step
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        if step > 0 {
            for (bid, branch) in branches.iter().enumerate() {
                if branch.last_step() + 1 != step {
                    continue;
                }
                let last = branch.points.last().unwrap();
                let prev_feature = feature(center, radii[step - 1], &RawPoint {
                    point: last.point.clone(),
                    f_value: last.f_value.clone(),
                    sing_score: last.sing_score,
                });
                for (pid, feat) in features.iter().enumerate() {
                    pairs.push((distance(&prev_feature, feat), bid, pid));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut branch_taken = vec![false; branches.len()];
        let mut point_taken = vec![false; features.len()];
        let mut assignment: Vec<Option<usize>> = vec![None; features.len()];
        for (_, bid, pid) in pairs {
            if !branch_taken[bid] && !point_taken[pid] {
                branch_taken[bid] = true;
                point_taken[pid] = true;
                assignment[pid] = Some(bid);
            }
        }
        for (pid, p) in points.into_iter().enumerate() {
            let tp = TrackPoint {
                step,
                radius,
                point: p.point,
                f_value: p.f_value,
                sing_score: p.sing_score,
            };
            match assignment[pid] {
                Some(bid) => branches[bid].points.push(tp),
                None => {
                    let id = branches.len();
                    branches.push(BranchTrack {
                        id,
                        points: vec![tp],
                    });
                }
            }
        }
    }
    branches
}

fn branch_limit(branch: &BranchTrack, last_step: usize, tol: f64, window: usize) -> Option<Vec<f64>> {
    let window = window.max(2);
    if branch.last_step() != last_step || branch.points.len() < window {
        return None;
    }
    let tail = &branch.points[branch.points.len() - window..];
    if tail
        .iter()
        .any(|p| p.f_value.iter().any(|v| !v.is_finite()))
    {
        return None;
    }
    // consecutive steps only: a branch with holes is not a tracked sequence
    if tail.windows(2).any(|w| w[1].step != w[0].step + 1) {
        return None;
    }
    let cauchy = tail
        .windows(2)
        .all(|w| distance(&w[0].f_value, &w[1].f_value) < tol);
    if cauchy {
        Some(tail.last().unwrap().f_value.clone())
    } else {
        None
    }
}

fn cluster_branches(
    branches: &[BranchTrack],
    last_step: usize,
    settings: &DetectSettings,
) -> Vec<LimitCluster> {
    let mut clusters: Vec<LimitCluster> = Vec::new();
    let mut limits: Vec<(usize, Vec<f64>, bool)> = Vec::new();
    for branch in branches {
        if let Some(value) = branch_limit(branch, last_step, settings.cluster_tol, settings.window)
        {
            let nontrivial = branch
                .points
                .iter()
                .all(|p| p.sing_score >= settings.sing_threshold);
            limits.push((branch.id, value, nontrivial));
        }
    }
    for (bid, value, nontrivial) in limits {
        let mut joined = false;
        for cluster in clusters.iter_mut() {
            let fits = cluster
                .members
                .iter()
                .map(|m| &branches[*m])
                .filter_map(|b| {
                    branch_limit(b, last_step, settings.cluster_tol, settings.window)
                })
                .all(|v| distance(&v, &value) <= settings.cluster_tol);
            if fits {
                cluster.members.push(bid);
                cluster.nontrivial = cluster.nontrivial && nontrivial;
                joined = true;
                break;
            }
        }
        if !joined {
            clusters.push(LimitCluster {
                value,
                members: vec![bid],
                spread: 0.0,
                nontrivial,
            });
        }
    }
    // recompute value as the member mean and the exact spread
    for cluster in clusters.iter_mut() {
        let values: Vec<Vec<f64>> = cluster
            .members
            .iter()
            .filter_map(|m| {
                branch_limit(
                    &branches[*m],
                    last_step,
                    settings.cluster_tol,
                    settings.window,
                )
            })
            .collect();
        let p = values[0].len();
        let mut mean = vec![0.0; p];
        for v in &values {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x / values.len() as f64;
            }
        }
        let mut spread: f64 = 0.0;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                spread = spread.max(distance(&values[i], &values[j]));
            }
        }
        cluster.value = mean;
        cluster.spread = spread;
    }
    clusters
}

/// Milnor-branch sweep for one center: all sphere intersections, linked
/// branches, and the limit clusters of branches with Cauchy `f`-values.
pub fn milnor_limits(
    f: &PolyMap,
    center: &[f64],
    sched: &RadiusSchedule,
    settings: &DetectSettings,
) -> Result<(Vec<BranchTrack>, Vec<LimitCluster>, CenterMode)> {
    if center.len() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "center of length {} for a map with n = {}",
            center.len(),
            f.n()
        )));
    }
    let radii = sched.radii();
    let sing = sing_system(f);
    let center_rat: Vec<Rational> = center
        .iter()
        .map(|&v| {
            Rational::from_float(v)
                .ok_or_else(|| Error::Numeric("non-finite center coordinate".to_string()))
        })
        .collect::<Result<_>>()?;
    let sys = milnor_system(f, &CenterSpec::Numeric(center_rat.clone()))?;

    let mode;
    let mut per_radius: Vec<Vec<RawPoint>> = Vec::with_capacity(radii.len());
    if f.n() == 2 {
        if sys.degenerate {
            mode = CenterMode::SampledFallback;
            for &r in &radii {
                per_radius.push(collect_points_sampled(
                    f,
                    &sing,
                    center,
                    r,
                    settings.fallback_samples,
                )?);
            }
        } else {
            let eq = &sys.equations[0];
            let mut fallback = false;
            for &r in &radii {
                let radius = Rational::from_float(r)
                    .ok_or_else(|| Error::Numeric("non-finite radius".to_string()))?;
                match collect_points_exact(eq, f, &sing, &center_rat, &radius)? {
                    Some(points) => per_radius.push(points),
                    None => {
                        fallback = true;
                        break;
                    }
                }
            }
            if fallback {
                per_radius.clear();
                for &r in &radii {
                    per_radius.push(collect_points_sampled(
                        f,
                        &sing,
                        center,
                        r,
                        settings.fallback_samples,
                    )?);
                }
                mode = CenterMode::SampledFallback;
            } else {
                mode = CenterMode::Exact;
            }
        }
    } else {
        if sys.degenerate {
            return Err(Error::Degenerate(
                "degenerate Milnor system is only sampled for n = 2".to_string(),
            ));
        }
        mode = CenterMode::Continuation;
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5EED_0001);
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        for (k, &r) in radii.iter().enumerate() {
            let scaled: Vec<Vec<f64>> = seeds
                .iter()
                .map(|s| {
                    s.iter()
                        .zip(center.iter())
                        .map(|(x, a)| a + (x - a) * sched.ratio)
                        .collect()
                })
                .collect();
            let fresh = if k == 0 {
                settings.continuation_starts
            } else {
                settings.continuation_starts / 8 + 4
            };
            let points = collect_points_continuation(
                f,
                &sys.equations,
                &sing,
                center,
                r,
                &scaled,
                fresh,
                &mut rng,
            )?;
            seeds = points.iter().map(|p| p.point.clone()).collect();
            per_radius.push(points);
        }
    }

    let branches = link_branches(center, &radii, per_radius);
    let clusters = cluster_branches(&branches, radii.len() - 1, settings);
    Ok((branches, clusters, mode))
}

/// Rabier-audit evidence along a tracked branch: `|x| * nu(Df(x))` at every
/// point, passing when the product at the largest radius is below the audit
/// tolerance and trends downward over the trailing window.
pub fn audit_rabier(f: &PolyMap, track: &BranchTrack, settings: &DetectSettings) -> AuditRecord {
    let jac = jacobian(f);
    let mut products = Vec::with_capacity(track.points.len());
    for p in &track.points {
        let product = (|| -> Result<f64> {
            let entries = jac.eval_f64(&p.point)?;
            let matrix = RealMatrix::from_rows(&entries)?;
            let norm = p.point.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(norm * nu(&matrix)?)
        })()
        .unwrap_or(f64::NAN);
        products.push(product);
    }
    let window = settings.window.max(2);
    let last_product = products.last().copied().unwrap_or(f64::NAN);
    let decreasing = products.len() >= window
        && products[products.len() - window..]
            .windows(2)
            .all(|w| w[1] < w[0]);
    let pass = last_product.is_finite() && last_product < settings.audit_tol && decreasing;
    AuditRecord {
        branch: track.id,
        products,
        last_product,
        decreasing,
        pass,
    }
}

fn draw_random_centers(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .collect()
}

/// Full sweep: always includes the origin, then user centers, then seeded
/// random centers; intersects per-center cluster values within the match
/// tolerance. A value enters the nontrivial estimate only when its matched
/// cluster is nontrivial at every center.
pub fn s_infty_estimate(
    f: &PolyMap,
    var_names: &[String],
    user_centers: &[Vec<f64>],
    sched: &RadiusSchedule,
    settings: &DetectSettings,
) -> Result<DetectionReport> {
    let n = f.n();
    for c in user_centers {
        if c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "center of length {} for a map with n = {}",
                c.len(),
                n
            )));
        }
    }
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for c in user_centers
        .iter()
        .cloned()
        .chain(draw_random_centers(n, settings.random_centers, settings.seed))
    {
        if !centers.contains(&c) {
            centers.push(c);
        }
    }
    if centers.len() < 2 {
        return Err(Error::InvalidDimensions(
            "at least 2 centers are required".to_string(),
        ));
    }

    let center_reports: Vec<CenterReport> = centers
        .par_iter()
        .map(|center| -> Result<CenterReport> {
            let (branches, clusters, mode) = milnor_limits(f, center, sched, settings)?;
            let audits: Vec<ClusterAudit> = clusters
                .iter()
                .enumerate()
                .map(|(ci, cluster)| {
                    let records: Vec<AuditRecord> = cluster
                        .members
                        .iter()
                        .map(|&bid| audit_rabier(f, &branches[bid], settings))
                        .collect();
                    let all_pass = records.iter().all(|r| r.pass);
                    ClusterAudit {
                        cluster_index: ci,
                        records,
                        all_pass,
                    }
                })
                .collect();
            Ok(CenterReport {
                center: center.clone(),
                mode,
                degenerate: mode == CenterMode::SampledFallback,
                branches,
                clusters,
                audits,
            })
        })
        .collect::<Result<_>>()?;

    // intersect cluster values across centers, seeding candidates from the
    // first center
    let mut s_infty = Vec::new();
    let mut ns_infty = Vec::new();
    for candidate in &center_reports[0].clusters {
        let mut matched: Vec<Vec<f64>> = Vec::new();
        let mut matched_nontrivial: Vec<Vec<f64>> = Vec::new();
        let mut in_all = true;
        let mut nontrivial_in_all = candidate.nontrivial;
        for report in &center_reports {
            let best = report
                .clusters
                .iter()
                .filter(|c| distance(&c.value, &candidate.value) <= settings.match_tol)
                .min_by(|a, b| {
                    distance(&a.value, &candidate.value)
                        .partial_cmp(&distance(&b.value, &candidate.value))
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            match best {
                Some(c) => {
                    matched.push(c.value.clone());
                    if c.nontrivial {
                        matched_nontrivial.push(c.value.clone());
                    } else {
                        nontrivial_in_all = false;
                    }
                }
                None => {
                    in_all = false;
                    break;
                }
            }
        }
        if !in_all {
            continue;
        }
        let p = candidate.value.len();
        let mut mean = vec![0.0; p];
        for v in &matched {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x / matched.len() as f64;
            }
        }
        let duplicate = |list: &Vec<EstimateEntry>| {
            list.iter()
                .any(|e: &EstimateEntry| distance(&e.value, &mean) <= settings.match_tol)
        };
        if !duplicate(&s_infty) {
            s_infty.push(EstimateEntry {
                value: mean.clone(),
                per_center: matched.clone(),
            });
        }
        if nontrivial_in_all && !duplicate(&ns_infty) {
            ns_infty.push(EstimateEntry {
                value: mean,
                per_center: matched,
            });
        }
    }

    let map_text = f
        .components()
        .iter()
        .map(|c| {
            let refs: Vec<&str> = var_names.iter().map(|s| s.as_str()).collect();
            c.to_text(&refs)
        })
        .collect();
    Ok(DetectionReport {
        meta: ReportMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            map: map_text,
            vars: var_names.to_vec(),
            n,
            p: f.p(),
            d: f.degree(),
            s: degree_bound(n as u32, f.p() as u32, f.degree()).ok(),
            schedule: sched.clone(),
            settings: settings.clone(),
            disclaimer: DISCLAIMER.to_string(),
        },
        centers: center_reports,
        s_infty,
        ns_infty,
    })
}

/// Stable-order JSON rendering of a report.
pub fn report_to_json(report: &DetectionReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization cannot fail")
}

/// Per-branch CSV traces: one row per tracked point.
pub fn traces_to_csv(report: &DetectionReport) -> String {
    let n = report.meta.n;
    let p = report.meta.p;
    let mut out = String::from("center_index,branch,step,radius");
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    for i in 1..=p {
        out.push_str(&format!(",f_{i}"));
    }
    out.push_str(",sing_score\n");
    for (ci, center) in report.centers.iter().enumerate() {
        for branch in &center.branches {
            for pt in &branch.points {
                out.push_str(&format!("{ci},{},{},{:e}", branch.id, pt.step, pt.radius));
                for v in &pt.point {
                    out.push_str(&format!(",{v:e}"));
                }
                for v in &pt.f_value {
                    out.push_str(&format!(",{v:e}"));
                }
                out.push_str(&format!(",{:e}\n", pt.sing_score));
            }
        }
    }
    out
}

/// Minimal static SVG: per-branch polylines of a squashed f-value against
/// `log10 R`, one panel per center.
pub fn branches_svg(report: &DetectionReport) -> String {
    let width = 640.0;
    let panel_h = 160.0;
    let height = panel_h * report.centers.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    );
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let squash = |v: f64| -> f64 {
        // sign-preserving log squeeze keeps divergent branches on the panel
        let s = v.signum() * (1.0 + v.abs()).log10();
        s.clamp(-8.0, 8.0)
    };
    let radii = report.meta.schedule.radii();
    let log_lo = radii.first().copied().unwrap_or(1.0).log10();
    let log_hi = radii.last().copied().unwrap_or(10.0).log10();
    for (ci, center) in report.centers.iter().enumerate() {
        let top = ci as f64 * panel_h;
        let mid = top + panel_h / 2.0;
        out.push_str(&format!(
            "<line x1=\"40\" y1=\"{mid}\" x2=\"{:.1}\" y2=\"{mid}\" stroke=\"#999\"/>\n",
            width - 10.0
        ));
        out.push_str(&format!(
            "<text x=\"8\" y=\"{:.1}\" font-size=\"10\">a={:?}</text>\n",
            top + 14.0,
            center.center
        ));
        for branch in &center.branches {
            if branch.points.len() < 2 {
                continue;
            }
            let mut path = String::new();
            for pt in &branch.points {
                let fx = if pt.f_value.len() == 1 {
                    pt.f_value[0]
                } else {
                    pt.f_value.iter().map(|v| v * v).sum::<f64>().sqrt()
                };
                let px = 40.0
                    + (width - 50.0) * (pt.radius.log10() - log_lo) / (log_hi - log_lo).max(1e-9);
                let py = mid - squash(fx) * (panel_h / 2.0 - 10.0) / 8.0;
                if path.is_empty() {
                    path.push_str(&format!("M {px:.1} {py:.1}"));
                } else {
                    path.push_str(&format!(" L {px:.1} {py:.1}"));
                }
            }
            let color = palette[branch.id % palette.len()];
            out.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>\n"
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn settings() -> DetectSettings {
        DetectSettings {
            seed: 11,
            ..DetectSettings::default()
        }
    }

    fn tz_map() -> PolyMap {
        PolyMap::new(
            2,
            vec![parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn tz_origin_sweep_finds_single_zero_cluster() {
        let sched = RadiusSchedule::new(100.0, 10.0, 5).unwrap();
        let (branches, clusters, mode) =
            milnor_limits(&tz_map(), &[0.0, 0.0], &sched, &settings()).unwrap();
        assert_eq!(mode, CenterMode::Exact);
        assert!(!branches.is_empty());
        assert_eq!(clusters.len(), 1, "clusters: {clusters:?}");
        let c = &clusters[0];
        assert!(c.value[0].abs() < 1e-3);
        assert!(c.nontrivial);
    }

    #[test]
    fn linear_map_sweep_has_no_clusters() {
        let f = PolyMap::new(2, vec![parse_poly("x", &["x", "y"]).unwrap()]).unwrap();
        let sched = RadiusSchedule::new(100.0, 10.0, 4).unwrap();
        let (branches, clusters, mode) =
            milnor_limits(&f, &[0.5, -2.0], &sched, &settings()).unwrap();
        assert_eq!(mode, CenterMode::Exact);
        assert!(branches.len() >= 2);
        assert!(clusters.is_empty());
    }

    #[test]
    fn proper_map_degenerate_center_falls_back_to_sampling() {
        let f = PolyMap::new(2, vec![parse_poly("x^2+y^2", &["x", "y"]).unwrap()]).unwrap();
        let sched = RadiusSchedule::new(100.0, 10.0, 4).unwrap();
        let (_, clusters, mode) = milnor_limits(&f, &[0.0, 0.0], &sched, &settings()).unwrap();
        assert_eq!(mode, CenterMode::SampledFallback);
        assert!(clusters.is_empty()); // f = R^2 diverges
    }

    #[test]
    fn continuation_mode_projection_in_three_vars() {
        let f = PolyMap::new(3, vec![parse_poly("x", &["x", "y", "z"]).unwrap()]).unwrap();
        let sched = RadiusSchedule::new(10.0, 10.0, 4).unwrap();
        let (branches, clusters, mode) =
            milnor_limits(&f, &[0.0, 0.5, -0.5], &sched, &settings()).unwrap();
        assert_eq!(mode, CenterMode::Continuation);
        // Milnor set is the line {y = 0.5, z = -0.5}: two sphere points
        assert!(branches.iter().any(|b| b.points.len() >= 3));
        assert!(clusters.is_empty()); // f = x = +-R diverges
    }

    #[test]
    fn continuation_mode_finds_planar_cluster_embedded_in_r3() {
        // TZ in (x, y), constant in z: branches live in the z = a_3 plane
        let f = PolyMap::new(
            3,
            vec![parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y", "z"]).unwrap()],
        )
        .unwrap();
        let sched = RadiusSchedule::new(100.0, 10.0, 5).unwrap();
        let (_, clusters, mode) =
            milnor_limits(&f, &[0.0, 0.0, 0.3], &sched, &settings()).unwrap();
        assert_eq!(mode, CenterMode::Continuation);
        assert!(
            clusters.iter().any(|c| c.value[0].abs() < 1e-2),
            "clusters: {clusters:?}"
        );
    }

    #[test]
    fn audit_passes_on_tz_cluster_branches() {
        let f = tz_map();
        let sched = RadiusSchedule::new(100.0, 10.0, 5).unwrap();
        let cfg = settings();
        let (branches, clusters, _) = milnor_limits(&f, &[1.0, 2.0], &sched, &cfg).unwrap();
        assert!(!clusters.is_empty());
        for cluster in &clusters {
            for &bid in &cluster.members {
                let audit = audit_rabier(&f, &branches[bid], &cfg);
                assert!(audit.pass, "audit failed: {audit:?}");
            }
        }
    }

    #[test]
    fn audit_fails_on_straight_line_track_of_linear_map() {
        let f = PolyMap::new(2, vec![parse_poly("x", &["x", "y"]).unwrap()]).unwrap();
        // artificial non-Milnor straight-line track: nu = 1 so products grow
        let track = BranchTrack {
            id: 0,
            points: (0..4)
                .map(|k| {
                    let r = 100.0 * 10f64.powi(k);
                    TrackPoint {
                        step: k as usize,
                        radius: r,
                        point: vec![r, r],
                        f_value: vec![r],
                        sing_score: 1.0,
                    }
                })
                .collect(),
        };
        let audit = audit_rabier(&f, &track, &settings());
        assert!(!audit.pass);
    }

    #[test]
    fn tz_full_estimate_reports_zero() {
        let f = tz_map();
        let sched = RadiusSchedule::new(100.0, 10.0, 5).unwrap();
        let cfg = DetectSettings {
            seed: 7,
            random_centers: 2,
            ..DetectSettings::default()
        };
        let report = s_infty_estimate(
            &f,
            &["x".to_string(), "y".to_string()],
            &[vec![1.0, 2.0]],
            &sched,
            &cfg,
        )
        .unwrap();
        assert_eq!(report.s_infty.len(), 1);
        assert!(report.s_infty[0].value[0].abs() < 1e-3);
        assert_eq!(report.ns_infty.len(), 1);
        assert!(report.meta.disclaimer.contains("B_infinity"));
    }

    #[test]
    fn estimate_is_deterministic() {
        let f = tz_map();
        let sched = RadiusSchedule::new(100.0, 10.0, 4).unwrap();
        let cfg = DetectSettings {
            seed: 3,
            random_centers: 1,
            ..DetectSettings::default()
        };
        let names = ["x".to_string(), "y".to_string()];
        let r1 = s_infty_estimate(&f, &names, &[], &sched, &cfg).unwrap();
        let r2 = s_infty_estimate(&f, &names, &[], &sched, &cfg).unwrap();
        assert_eq!(report_to_json(&r1), report_to_json(&r2));
    }

    #[test]
    fn schedule_validation() {
        assert!(RadiusSchedule::new(0.0, 10.0, 5).is_err());
        assert!(RadiusSchedule::new(10.0, 1.0, 5).is_err());
        assert!(RadiusSchedule::new(10.0, 10.0, 3).is_err());
    }

    #[test]
    fn csv_and_svg_render() {
        let f = tz_map();
        let sched = RadiusSchedule::new(100.0, 10.0, 4).unwrap();
        let cfg = DetectSettings {
            seed: 5,
            random_centers: 0,
            ..DetectSettings::default()
        };
        let report = s_infty_estimate(
            &f,
            &["x".to_string(), "y".to_string()],
            &[vec![1.0, 2.0]],
            &sched,
            &cfg,
        )
        .unwrap();
        let csv = traces_to_csv(&report);
        assert!(csv.starts_with("center_index,branch,step,radius,x_1,x_2,f_1,sing_score\n"));
        assert!(csv.lines().count() > 3);
        let svg = branches_svg(&report);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<path"));
    }
}
