//! Fair clustering solved through facility location.
//!
//! The solver never optimizes fairness directly. It computes the critical
//! regions of the input, builds a facility location instance over *copies*
//! of the input points, and lets a partition matroid force one open facility
//! into every critical ball:
//!
//! * every point contributes one facility copy to a shared pool (joint
//!   budget `k − m`) and one client copy carrying its weight as demand;
//! * every member of critical ball `i` contributes an extra facility copy
//!   that counts against ball `i`'s budget of one.
//!
//! Distinct copies of one point sit at a small positive self-distance
//! `min{(ε(n−k)/(βk))^{1/p}, 1}·δ`, where `δ` is the smallest pairwise
//! distance of the input. That keeps the copy space a genuine metric while
//! inflating the optimal cost by at most a factor `1 + ε/β`, so a
//! `β`-approximate facility location solution maps back to a `3α`-fair
//! clustering within `β + ε` of the optimal `α`-fair cost. [`kcenter`] runs
//! the same playbook for the k-center objective.

pub mod kcenter;

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::facility_location::{
    solve_matroid_fl, CertificateChain, FlError, FlInstance, FlOptions,
};
use crate::fairness::{
    critical_regions, fairness_audit, feasible_wrt_regions, CriticalRegions, FairnessError,
};
use crate::geometry::{CostParams, Dataset, GeometryError, PointId};
use crate::math::{approx_le, pow};
use crate::matroid::{MatroidError, PartitionMatroid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("invalid reduction input: {0}")]
    Invalid(&'static str),
    /// The copy construction needs a positive minimum pairwise distance;
    /// merge duplicate points (e.g. by accumulating weights) first.
    #[error("dataset contains duplicate points")]
    DuplicatePoints,
    #[error("solution cannot be mapped back: {0}")]
    InvalidSolution(&'static str),
    #[error("no feasible center set under the partition matroid")]
    Infeasible,
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Fl(#[from] FlError),
}

/// Role of one copy in a reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CopyTag {
    /// Facility copy that counts against critical ball `i`'s budget of one.
    Ball(usize),
    /// Facility copy in the shared pool (one per input point, joint budget
    /// `k − m`).
    Pool,
    /// Client copy (one per input point, demand = point weight).
    Client,
}

/// Output of [`reduce_fair_to_fl`]: the facility location instance plus the
/// bookkeeping needed to interpret its solutions.
#[derive(Clone, Debug)]
pub struct ReductionOutput {
    /// Instance over point copies; all opening costs are zero.
    pub instance: FlInstance,
    /// Origin of every copy, indexed like the instance's joint metric: ball
    /// copies (ball-major, members ascending), then pool copies, then client
    /// copies (both in dataset order).
    pub copy_map: Vec<(PointId, CopyTag)>,
    /// Critical regions the reduction was built from.
    pub regions: CriticalRegions,
    /// Smallest pairwise distance of the input.
    pub delta: f64,
    /// Distance between distinct copies of one point.
    pub self_distance: f64,
    pub epsilon: f64,
    /// Approximation factor assumed of the downstream facility solver.
    pub beta: f64,
    /// Number of critical regions (= ball parts in the matroid).
    pub m: usize,
    pub k: usize,
}

impl ReductionOutput {
    /// Cost of serving every client copy from its nearest facility in
    /// `open`, plus opening costs (all zero here). This is the quantity the
    /// facility location pipeline minimizes; the mapped-back centers never
    /// cost more on the input than `open` costs here.
    pub fn cost_on_copies(&self, open: &[usize]) -> Result<f64, ReductionError> {
        let inst = &self.instance;
        if open.is_empty() {
            return Err(ReductionError::InvalidSolution("no facilities are open"));
        }
        let mut total = 0.0;
        for &u in open {
            if u >= inst.num_facilities() {
                return Err(ReductionError::InvalidSolution("facility index out of range"));
            }
            total += inst.opening(u);
        }
        for v in 0..inst.num_clients() {
            let best = open.iter().map(|&u| inst.d_cf(v, u)).fold(f64::INFINITY, f64::min);
            total += inst.demands()[v] * pow(best, inst.params().p);
        }
        Ok(total)
    }
}

/// End-to-end solver output: the chosen centers plus audited guarantees and
/// the configuration they were produced under.
#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Chosen centers, ascending point ids, at most `k` of them.
    pub centers: Vec<PointId>,
    /// Cost of `centers` on the input: weighted sum of `d(v, centers)^p`
    /// for the ℓp solver, maximum distance for the k-center solver.
    pub cost: f64,
    /// Cost exponent; `None` for the k-center objective.
    pub p: Option<f64>,
    pub k: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// Approximation factor of the inner solver (`16^p` or `22` for the ℓp
    /// pipeline, `3` for k-center, `1` on the trivial `k = n` path). The
    /// end-to-end guarantee is `cost ≤ (beta + epsilon)` times the optimal
    /// `alpha`-fair cost.
    pub beta: f64,
    /// Number of critical regions.
    pub m: usize,
    /// Largest `d(v, centers) / r(v)` over the input; at most `3·alpha`.
    pub fairness_max_ratio: f64,
    /// Inequality chain recorded by the LP rounding; `None` on the trivial
    /// and k-center paths.
    pub chain: Option<CertificateChain>,
}

/// Shared parameter screening for both reductions; returns the minimum
/// pairwise distance `δ > 0`.
pub(crate) fn reduction_prologue(
    ds: &Dataset,
    k: usize,
    beta: f64,
) -> Result<f64, ReductionError> {
    let n = ds.len();
    if k == 0 || k > n {
        return Err(ReductionError::Invalid("k must be between 1 and n"));
    }
    if k == n {
        return Err(ReductionError::Invalid(
            "k = n is trivially solvable; the reduction needs k < n",
        ));
    }
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(ReductionError::Invalid("beta must be finite and >= 1"));
    }
    let delta = ds
        .min_pairwise_distance()
        .ok_or(ReductionError::Invalid("dataset needs at least two points"))?;
    if delta == 0.0 {
        return Err(ReductionError::DuplicatePoints);
    }
    Ok(delta)
}

/// Ball copies (ball-major, members ascending), then one pool copy per
/// point. Returns the underlying dataset index of each copy alongside the
/// public `(id, tag)` map.
pub(crate) fn copy_layout(
    ds: &Dataset,
    regions: &CriticalRegions,
) -> (Vec<usize>, Vec<(PointId, CopyTag)>) {
    let mut underlying = Vec::new();
    let mut copy_map = Vec::new();
    for i in 0..regions.m() {
        for &v in regions.members(i) {
            underlying.push(v);
            copy_map.push((ds.id_of(v), CopyTag::Ball(i)));
        }
    }
    for v in 0..ds.len() {
        underlying.push(v);
        copy_map.push((ds.id_of(v), CopyTag::Pool));
    }
    (underlying, copy_map)
}

/// The copy metric: original distance between copies of distinct points,
/// `self_distance` between distinct copies of one point, zero on the
/// diagonal. A positive `self_distance` no larger than `δ` keeps every
/// triangle valid: any two-leg path is either `≥ 2·self_distance`, or
/// `≥ δ ≥ self_distance`, or matches the original metric.
pub(crate) fn copy_metric(
    ds: &Dataset,
    underlying: &[usize],
    self_distance: f64,
) -> Vec<Vec<f64>> {
    let n = underlying.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = if underlying[a] == underlying[b] {
                self_distance
            } else {
                ds.dist_idx(underlying[a], underlying[b])
            };
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    dist
}

/// Partition matroid over the facility copies: one part per ball with
/// budget 1, then the pool with budget `k − m`.
pub(crate) fn copy_matroid(
    copy_map: &[(PointId, CopyTag)],
    m: usize,
    k: usize,
) -> Result<PartitionMatroid, ReductionError> {
    let mut parts = vec![Vec::new(); m + 1];
    for (u, &(_, tag)) in copy_map.iter().enumerate() {
        match tag {
            CopyTag::Ball(i) => parts[i].push(u as u32),
            CopyTag::Pool => parts[m].push(u as u32),
            CopyTag::Client => {}
        }
    }
    let mut caps = vec![1; m];
    caps.push(k - m);
    Ok(PartitionMatroid::new(parts, caps)?)
}

/// Builds the facility location instance whose good solutions are fair
/// clusterings. Demands carry the input weights (all 1 for unweighted
/// data). `beta` must be the approximation factor of the solver that will
/// consume the instance: the self-distance is calibrated so that `beta`
/// times the instance optimum stays within `beta + epsilon` of the optimal
/// `alpha`-fair cost.
pub fn reduce_fair_to_fl(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
    beta: f64,
    p: f64,
) -> Result<ReductionOutput, ReductionError> {
    let params = CostParams::with_p(p)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ReductionError::Invalid("epsilon must lie in (0, 1)"));
    }
    let delta = reduction_prologue(ds, k, beta)?;
    let regions = critical_regions(ds, k, alpha)?;
    let m = regions.m();
    let n = ds.len();

    // Distinct copies of one point sit at scale·δ: small enough that the at
    // most k copy hops of an optimal solution cost ≤ ε(n−k)δ^p/β in total,
    // which is an ε/β fraction of any solution's cost because at least n−k
    // points pay at least δ each.
    let ratio = epsilon * ((n - k) as f64) / (beta * k as f64);
    let scale = pow(ratio, 1.0 / p).min(1.0);
    let self_distance = scale * delta;

    let (mut underlying, mut copy_map) = copy_layout(ds, &regions);
    let nf = underlying.len();
    let matroid = copy_matroid(&copy_map, m, k)?;
    for v in 0..n {
        underlying.push(v);
        copy_map.push((ds.id_of(v), CopyTag::Client));
    }
    let dist = copy_metric(ds, &underlying, self_distance);
    let demand = ds.points().iter().map(|pt| pt.weight).collect();
    let instance = FlInstance::new(vec![0.0; nf], demand, dist, params, matroid, false)?;
    Ok(ReductionOutput {
        instance,
        copy_map,
        regions,
        delta,
        self_distance,
        epsilon,
        beta,
        m,
        k,
    })
}

/// Adds the lowest-indexed copy of every ball whose budget went unused, so
/// that [`map_back`] finds a representative in each ball. Opening costs are
/// zero and extra open facilities only lower the assignment cost, so padding
/// never worsens the solution it patches. Returns the padded set, ascending.
pub fn pad_ball_coverage(red: &ReductionOutput, open: &[usize]) -> Vec<usize> {
    pad_missing_balls(&red.copy_map, red.m, open)
}

pub(crate) fn pad_missing_balls(
    copy_map: &[(PointId, CopyTag)],
    m: usize,
    open: &[usize],
) -> Vec<usize> {
    let mut chosen: BTreeSet<usize> = open.iter().copied().collect();
    let mut ball_hit = vec![false; m];
    for &u in open {
        if let Some(&(_, CopyTag::Ball(i))) = copy_map.get(u) {
            ball_hit[i] = true;
        }
    }
    for (i, hit) in ball_hit.iter().enumerate() {
        if !hit {
            let u = copy_map
                .iter()
                .position(|&(_, tag)| tag == CopyTag::Ball(i))
                .expect("ball parts are nonempty");
            chosen.insert(u);
        }
    }
    chosen.into_iter().collect()
}

/// Converts an open facility set back into input centers: the ball
/// representatives plus the pool picks, deduplicated (a point may have been
/// opened both ways). Requires independence and one representative per ball;
/// the result then has at most `k` centers and one inside every critical
/// ball, so it is `3α`-fair. Output ids ascend.
pub fn map_back(red: &ReductionOutput, open: &[usize]) -> Result<Vec<PointId>, ReductionError> {
    map_back_copies(&red.copy_map, red.instance.matroid(), red.m, red.k, open)
}

pub(crate) fn map_back_copies(
    copy_map: &[(PointId, CopyTag)],
    matroid: &PartitionMatroid,
    m: usize,
    k: usize,
    open: &[usize],
) -> Result<Vec<PointId>, ReductionError> {
    let picks: BTreeSet<usize> = open.iter().copied().collect();
    let mut elems = Vec::with_capacity(picks.len());
    for &u in &picks {
        if u >= matroid.ground_size() {
            return Err(ReductionError::InvalidSolution("facility index out of range"));
        }
        elems.push(u as u32);
    }
    if !matroid.is_independent(&elems)? {
        return Err(ReductionError::InvalidSolution(
            "facility set violates the partition matroid",
        ));
    }
    let mut ball_hit = vec![false; m];
    let mut centers = BTreeSet::new();
    for &u in &picks {
        let (id, tag) = copy_map[u];
        match tag {
            CopyTag::Ball(i) => {
                ball_hit[i] = true;
                centers.insert(id);
            }
            CopyTag::Pool => {
                centers.insert(id);
            }
            CopyTag::Client => {
                return Err(ReductionError::InvalidSolution(
                    "client copy opened as a facility",
                ))
            }
        }
    }
    if ball_hit.iter().any(|hit| !hit) {
        return Err(ReductionError::InvalidSolution(
            "a critical ball has no representative",
        ));
    }
    if centers.is_empty() || centers.len() > k {
        return Err(ReductionError::InvalidSolution(
            "mapped centers must number between 1 and k",
        ));
    }
    Ok(centers.into_iter().collect())
}

/// `k = n`: every point is its own center at cost zero.
pub(crate) fn trivial_report(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
    p: Option<f64>,
) -> Result<SolveReport, ReductionError> {
    let mut centers: Vec<PointId> = (0..ds.len()).map(|v| ds.id_of(v)).collect();
    centers.sort_unstable();
    let cost = match p {
        Some(p) => ds.clustering_cost(&centers, &CostParams::with_p(p)?)?,
        None => ds.max_distance_cost(&centers)?,
    };
    let audit = fairness_audit(ds, &centers, k)?;
    Ok(SolveReport {
        centers,
        cost,
        p,
        k,
        alpha,
        epsilon,
        beta: 1.0,
        m: 0,
        fairness_max_ratio: audit.max_ratio,
        chain: None,
    })
}

/// Re-audits a finished report against the regions that produced it and
/// fills in the measured fairness ratio.
pub(crate) fn audited(
    ds: &Dataset,
    regions: &CriticalRegions,
    mut report: SolveReport,
) -> Result<SolveReport, ReductionError> {
    if !feasible_wrt_regions(ds, regions, &report.centers)? {
        return Err(ReductionError::Internal("a critical ball was left uncovered"));
    }
    let audit = fairness_audit(ds, &report.centers, report.k)?;
    if !approx_le(audit.max_ratio, 3.0 * report.alpha, 1e-9) {
        return Err(ReductionError::Internal("fairness ratio exceeds 3·alpha"));
    }
    report.fairness_max_ratio = audit.max_ratio;
    Ok(report)
}

/// The full ℓp solver: critical regions → facility location reduction → LP
/// rounding → back-mapping → audit. The returned centers are `3α`-fair and
/// cost at most `(β + ε)` times the optimal `α`-fair cost, where `β` is the
/// rounding guarantee (`16^p` for `p > 1`, `22` for `p = 1`).
pub fn solve_fair_clustering(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
    p: f64,
) -> Result<SolveReport, ReductionError> {
    solve_fair_clustering_with(ds, k, alpha, epsilon, p, &FlOptions::default())
}

/// [`solve_fair_clustering`] with explicit rounding options (e.g. exact
/// rational arithmetic for the rounding-stage LPs).
pub fn solve_fair_clustering_with(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
    p: f64,
    opts: &FlOptions,
) -> Result<SolveReport, ReductionError> {
    let params = CostParams::with_p(p)?;
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(ReductionError::Invalid("alpha must be finite and >= 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ReductionError::Invalid("epsilon must lie in (0, 1)"));
    }
    let n = ds.len();
    if k == 0 || k > n {
        return Err(ReductionError::Invalid("k must be between 1 and n"));
    }
    if k == n {
        return trivial_report(ds, k, alpha, epsilon, Some(p));
    }
    let beta = if p == 1.0 { 22.0 } else { pow(16.0, p) };
    let red = reduce_fair_to_fl(ds, k, alpha, epsilon, beta, p)?;
    let fl = solve_matroid_fl(&red.instance, opts)?;
    let open = pad_ball_coverage(&red, &fl.open);
    let centers = map_back(&red, &open)?;
    let cost = ds.clustering_cost(&centers, &params)?;

    // The mapped centers cannot cost more than the facility solution they
    // came from: each input point sits at least as close to a center as its
    // client copy sits to an open copy, and padding added only facilities.
    let copy_cost = red.cost_on_copies(&open)?;
    if !approx_le(cost, copy_cost, 1e-9) || !approx_le(copy_cost, fl.cost, 1e-9) {
        return Err(ReductionError::Internal(
            "mapped solution costs more than its facility solution",
        ));
    }
    audited(
        ds,
        &red.regions,
        SolveReport {
            centers,
            cost,
            p: Some(p),
            k,
            alpha,
            epsilon,
            beta,
            m: red.m,
            fairness_max_ratio: 0.0,
            chain: Some(fl.chain),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::oracle::{oracle_fair_clustering, OracleWitness};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Dataset {
        let pts = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Point::unit(i as PointId, vec![x]))
            .collect();
        Dataset::euclidean(pts).unwrap()
    }

    fn random_ds(seed: u64, n: usize, dim: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|i| {
                Point::unit(i as PointId, (0..dim).map(|_| 10.0 * rng.random::<f64>()).collect())
            })
            .collect();
        Dataset::euclidean(pts).unwrap()
    }

    // n=2, k=1: one ball holding both points, pool budget k−m = 0. With
    // ε=1/4, β=2, p=1 the self-distance is (1/4 · 1/2)·δ = δ/8 = 1/4.
    #[test]
    fn two_point_reduction_matches_hand_trace() {
        let ds = line(&[0.0, 2.0]);
        let red = reduce_fair_to_fl(&ds, 1, 1.0, 0.25, 2.0, 1.0).unwrap();
        assert_eq!(red.m, 1);
        assert_eq!(red.delta, 2.0);
        assert_eq!(red.self_distance, 0.25);
        assert_eq!(
            red.copy_map,
            vec![
                (0, CopyTag::Ball(0)),
                (1, CopyTag::Ball(0)),
                (0, CopyTag::Pool),
                (1, CopyTag::Pool),
                (0, CopyTag::Client),
                (1, CopyTag::Client),
            ]
        );
        let inst = &red.instance;
        assert_eq!(inst.num_facilities(), 4);
        assert_eq!(inst.num_clients(), 2);
        assert_eq!(inst.demands(), &[1.0, 1.0]);
        assert!((0..4).all(|u| inst.opening(u) == 0.0));
        // Client 0 to its own ball and pool copies: self-distance.
        assert_eq!(inst.d_cf(0, 0), 0.25);
        assert_eq!(inst.d_cf(0, 2), 0.25);
        // Client 0 to copies of point 1: the original distance.
        assert_eq!(inst.d_cf(0, 1), 2.0);
        assert_eq!(inst.d_cf(0, 3), 2.0);
        // Ball budget 1, pool budget 0.
        let matroid = inst.matroid();
        assert!(matroid.is_independent(&[0]).unwrap());
        assert!(!matroid.is_independent(&[0, 1]).unwrap());
        assert!(!matroid.is_independent(&[2]).unwrap());
        inst.verify_metric().unwrap();
    }

    // ε(n−k)/(βk) = 1 makes the min{·, 1} clamp exact: self-distance = δ.
    // Anything larger stays clamped at δ.
    #[test]
    fn clamp_boundary_gives_self_distance_delta() {
        let ds = line(&[0.0, 1.0, 3.0]);
        let red = reduce_fair_to_fl(&ds, 1, 1.0, 0.5, 1.0, 2.0).unwrap();
        assert_eq!(red.self_distance, red.delta);
        assert_eq!(red.self_distance, 1.0);
        let red = reduce_fair_to_fl(&ds, 1, 1.0, 0.75, 1.0, 2.0).unwrap();
        assert_eq!(red.self_distance, 1.0);
    }

    #[test]
    fn copy_space_is_a_metric() {
        for (seed, n, k, alpha, p) in
            [(1u64, 5, 2, 1.0, 1.0), (2, 9, 3, 2.0, 2.0), (3, 14, 4, 1.5, 3.0)]
        {
            let ds = random_ds(seed, n, 2);
            let red = reduce_fair_to_fl(&ds, k, alpha, 0.1, 50.0, p).unwrap();
            red.instance.verify_metric().unwrap();
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let ds = line(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            reduce_fair_to_fl(&ds, 0, 1.0, 0.1, 16.0, 1.0),
            Err(ReductionError::Invalid(_))
        ));
        assert!(matches!(
            reduce_fair_to_fl(&ds, 3, 1.0, 0.1, 16.0, 1.0),
            Err(ReductionError::Invalid(_))
        ));
        assert!(matches!(
            reduce_fair_to_fl(&ds, 1, 1.0, 0.0, 16.0, 1.0),
            Err(ReductionError::Invalid(_))
        ));
        assert!(matches!(
            reduce_fair_to_fl(&ds, 1, 1.0, 1.0, 16.0, 1.0),
            Err(ReductionError::Invalid(_))
        ));
        assert!(matches!(
            reduce_fair_to_fl(&ds, 1, 1.0, 0.1, 0.5, 1.0),
            Err(ReductionError::Invalid(_))
        ));
        assert!(matches!(
            reduce_fair_to_fl(&ds, 1, 0.5, 0.1, 16.0, 1.0),
            Err(ReductionError::Fairness(_))
        ));
        let dup = line(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            reduce_fair_to_fl(&dup, 1, 1.0, 0.1, 16.0, 1.0),
            Err(ReductionError::DuplicatePoints)
        ));
    }

    #[test]
    fn demands_carry_point_weights() {
        let mut pts =
            vec![Point::unit(0, vec![0.0]), Point::unit(1, vec![1.0]), Point::unit(2, vec![3.0])];
        pts[1].weight = 2.5;
        let ds = Dataset::euclidean(pts).unwrap();
        let red = reduce_fair_to_fl(&ds, 1, 1.0, 0.1, 16.0, 1.0).unwrap();
        assert_eq!(red.instance.demands(), &[1.0, 2.5, 1.0]);
    }

    // Points 0,1,100 with k=2 collapse to one region (the far point is
    // covered because its own fair radius is huge), leaving pool budget 1.
    fn three_point_reduction() -> (Dataset, ReductionOutput) {
        let ds = line(&[0.0, 1.0, 100.0]);
        let red = reduce_fair_to_fl(&ds, 2, 1.0, 0.25, 2.0, 1.0).unwrap();
        assert_eq!(red.m, 1);
        assert_eq!(
            red.copy_map[..5],
            [
                (0, CopyTag::Ball(0)),
                (1, CopyTag::Ball(0)),
                (0, CopyTag::Pool),
                (1, CopyTag::Pool),
                (2, CopyTag::Pool),
            ]
        );
        (ds, red)
    }

    #[test]
    fn map_back_takes_ball_representatives() {
        let (_, red) = three_point_reduction();
        assert_eq!(map_back(&red, &[0]).unwrap(), vec![0]);
        assert_eq!(map_back(&red, &[1, 4]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn map_back_dedups_double_copies() {
        let (_, red) = three_point_reduction();
        // Ball copy and pool copy of point 0 both open → one center.
        assert_eq!(map_back(&red, &[0, 2]).unwrap(), vec![0]);
    }

    #[test]
    fn map_back_rejects_bad_solutions() {
        let (_, red) = three_point_reduction();
        // No ball representative.
        assert!(matches!(
            map_back(&red, &[2]),
            Err(ReductionError::InvalidSolution(_))
        ));
        // Two copies from the same ball part.
        assert!(matches!(
            map_back(&red, &[0, 1]),
            Err(ReductionError::InvalidSolution(_))
        ));
        // Out of range (client copies are not facilities).
        assert!(matches!(
            map_back(&red, &[5]),
            Err(ReductionError::InvalidSolution(_))
        ));
    }

    #[test]
    fn padding_fills_empty_balls_only() {
        let (_, red) = three_point_reduction();
        assert_eq!(pad_ball_coverage(&red, &[]), vec![0]);
        assert_eq!(pad_ball_coverage(&red, &[4]), vec![0, 4]);
        assert_eq!(pad_ball_coverage(&red, &[1, 4]), vec![1, 4]);
    }

    // Any valid facility pick maps to a feasible, 3α-fair center set whose
    // input cost never exceeds its copy cost.
    #[test]
    fn mapped_solutions_are_fair_and_cheaper_than_copies() {
        for seed in 0..12u64 {
            let n = 6 + (seed as usize % 5);
            let k = 2 + (seed as usize % 2);
            let alpha = if seed % 2 == 0 { 1.0 } else { 2.0 };
            let ds = random_ds(seed, n, 2);
            let red = reduce_fair_to_fl(&ds, k, alpha, 0.2, 256.0, 2.0).unwrap();
            // Deterministic valid pick: lowest copy of each ball, then pool
            // copies from the left until the budget is spent.
            let mut open = Vec::new();
            for i in 0..red.m {
                let u = red
                    .copy_map
                    .iter()
                    .position(|&(_, tag)| tag == CopyTag::Ball(i))
                    .unwrap();
                open.push(u);
            }
            let pool0 = red
                .copy_map
                .iter()
                .position(|&(_, tag)| tag == CopyTag::Pool)
                .unwrap();
            open.extend(pool0..pool0 + (red.k - red.m));
            let centers = map_back(&red, &open).unwrap();
            assert!(centers.len() <= k);
            assert!(feasible_wrt_regions(&ds, &red.regions, &centers).unwrap());
            let audit = fairness_audit(&ds, &centers, k).unwrap();
            assert!(audit.max_ratio <= 3.0 * alpha);
            let cost = ds.clustering_cost(&centers, red.instance.params()).unwrap();
            let copy_cost = red.cost_on_copies(&open).unwrap();
            assert!(approx_le(cost, copy_cost, 1e-12), "{cost} > {copy_cost}");
        }
    }

    // The copy space inflates the optimal fair cost by at most 1 + ε/β:
    // lifting the oracle's optimal centers into copies (one ball copy per
    // region, pool copies for the rest) costs at most that much more.
    #[test]
    fn optimal_solutions_lift_to_cheap_copy_solutions() {
        for (seed, n, k, p) in [(5u64, 8, 2, 1.0), (6, 9, 3, 2.0), (7, 10, 2, 2.0)] {
            let ds = random_ds(seed, n, 2);
            let alpha = 2.0;
            let epsilon = 0.25;
            let beta = pow(16.0, p);
            let params = CostParams::with_p(p).unwrap();
            let res = oracle_fair_clustering(&ds, k, alpha, &params).unwrap();
            let Some(opt) = res.value.finite() else {
                panic!("alpha = 2 instances should be feasible")
            };
            let OracleWitness::Centers(opt_centers) = res.witness else {
                panic!("finite oracle value carries centers")
            };
            let red = reduce_fair_to_fl(&ds, k, alpha, epsilon, beta, p).unwrap();

            // One ball copy per region, taken from the optimum (an α-fair
            // solution always has a center inside every critical ball), pool
            // copies of the remaining optimal centers.
            let mut lifted = Vec::new();
            let mut used = vec![false; opt_centers.len()];
            for i in 0..red.m {
                let (slot, &id) = opt_centers
                    .iter()
                    .enumerate()
                    .find(|&(slot, &id)| {
                        !used[slot]
                            && red.regions.members(i).contains(&ds.index_of(id).unwrap())
                    })
                    .expect("optimum has a center in every ball");
                used[slot] = true;
                let u = red
                    .copy_map
                    .iter()
                    .position(|&(cid, tag)| cid == id && tag == CopyTag::Ball(i))
                    .unwrap();
                lifted.push(u);
            }
            for (slot, &id) in opt_centers.iter().enumerate() {
                if !used[slot] {
                    let u = red
                        .copy_map
                        .iter()
                        .position(|&(cid, tag)| cid == id && tag == CopyTag::Pool)
                        .unwrap();
                    lifted.push(u);
                }
            }
            let elems: Vec<u32> = lifted.iter().map(|&u| u as u32).collect();
            assert!(red.instance.matroid().is_independent(&elems).unwrap());
            let lifted_cost = red.cost_on_copies(&lifted).unwrap();
            assert!(
                approx_le(lifted_cost, (1.0 + epsilon / beta) * opt, 1e-9),
                "lifted {lifted_cost} vs (1+ε/β)·{opt}"
            );
        }
    }

    #[test]
    fn k_equals_n_is_trivially_optimal() {
        let ds = line(&[0.0, 3.0, 7.0, 20.0]);
        let report = solve_fair_clustering(&ds, 4, 1.0, 0.1, 2.0).unwrap();
        assert_eq!(report.centers, vec![0, 1, 2, 3]);
        assert_eq!(report.cost, 0.0);
        assert_eq!(report.fairness_max_ratio, 0.0);
        assert_eq!(report.beta, 1.0);
        assert!(report.chain.is_none());
    }

    // Two well-separated triples, k=2, α=1, p=2: the fair optimum opens the
    // middle of each triple at cost 4. The solver must stay within (β+ε)·4
    // and 3α-fair; on this benign instance it should in fact be optimal.
    #[test]
    fn two_cluster_solve_stays_within_the_guarantee() {
        let ds = line(&[0.0, 1.0, 2.0, 100.0, 101.0, 102.0]);
        let params = CostParams::with_p(2.0).unwrap();
        let opt = oracle_fair_clustering(&ds, 2, 1.0, &params)
            .unwrap()
            .value
            .finite()
            .unwrap();
        assert_eq!(opt, 4.0);
        let report = solve_fair_clustering(&ds, 2, 1.0, 0.5, 2.0).unwrap();
        assert_eq!(report.beta, 256.0);
        assert_eq!(report.m, 2);
        assert!(report.cost >= opt);
        assert!(report.cost <= (report.beta + report.epsilon) * opt);
        assert!(report.fairness_max_ratio <= 3.0);
        assert!(report.centers.len() <= 2);
        let chain = report.chain.expect("lp path records a chain");
        chain.verify(1e-6).unwrap();
        assert_eq!(report.cost, 4.0);
    }

    #[test]
    fn solver_is_deterministic() {
        let ds = random_ds(42, 9, 2);
        let a = solve_fair_clustering(&ds, 3, 1.0, 0.1, 2.0).unwrap();
        let b = solve_fair_clustering(&ds, 3, 1.0, 0.1, 2.0).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_eq!(a.fairness_max_ratio.to_bits(), b.fairness_max_ratio.to_bits());
    }

    #[test]
    fn p_one_uses_the_implemented_rounding_factor() {
        let ds = random_ds(8, 7, 2);
        let report = solve_fair_clustering(&ds, 2, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(report.beta, 22.0);
        report.chain.unwrap().verify(1e-6).unwrap();
    }
}
