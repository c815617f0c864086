//! Threshold-based matroid center approximation.
//!
//! [`reduce_kcenter`] mirrors the ℓp reduction for the k-center objective:
//! same copies, same partition matroid, but the self-distance between
//! distinct copies of one point is the flat `ε·δ/β` (no cost exponent to
//! compensate for). [`kcenter_partition_matroid`] then solves k-center under
//! a partition matroid within factor 3 by thresholding: for a candidate
//! radius `R`, greedily pick *heads* pairwise more than `2R` apart and try
//! to match every head to its own facility within `R` without exceeding any
//! part budget. At any `R` at least the optimal radius the matching exists —
//! each head can take its optimal center, and heads more than `2R` apart
//! cannot share one — so the smallest accepted `R` is at most optimal, and
//! every point sits within `2R` of some head, hence within `3R` of an open
//! facility.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    audited, copy_layout, copy_matroid, copy_metric, map_back_copies, pad_missing_balls,
    reduction_prologue, trivial_report, CopyTag, ReductionError, SolveReport,
};
use crate::facility_location::triangle_sweep;
use crate::fairness::critical_regions;
use crate::geometry::{Dataset, PointId};
use crate::math::approx_le;
use crate::matroid::PartitionMatroid;

/// K-center under a partition matroid over point copies: pick an independent
/// set of copies minimizing the maximum distance from any copy to the set.
/// Plain data so tests and callers can also build instances directly;
/// [`kcenter_partition_matroid`] validates what it relies on.
#[derive(Clone, Debug)]
pub struct KCenterInstance {
    /// Symmetric metric over the copies.
    pub dist: Vec<Vec<f64>>,
    /// Ground set = copy indices `0..dist.len()`.
    pub matroid: PartitionMatroid,
    /// Origin of every copy: ball copies (ball-major), then pool copies.
    pub copy_map: Vec<(PointId, CopyTag)>,
    /// Smallest pairwise distance of the input.
    pub delta: f64,
    /// Distance between distinct copies of one point.
    pub self_distance: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Number of critical regions (= ball parts).
    pub m: usize,
    pub k: usize,
}

impl KCenterInstance {
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Shape and matroid screening: square symmetric nonnegative finite
    /// matrix with zero diagonal, ground set exactly the copy indices.
    pub fn validate(&self) -> Result<(), ReductionError> {
        let n = self.len();
        if n == 0 {
            return Err(ReductionError::Invalid("instance has no points"));
        }
        if self.dist.iter().any(|row| row.len() != n) {
            return Err(ReductionError::Invalid("distance matrix must be square"));
        }
        for a in 0..n {
            if self.dist[a][a] != 0.0 {
                return Err(ReductionError::Invalid("distance diagonal must be zero"));
            }
            for b in 0..n {
                let d = self.dist[a][b];
                if !d.is_finite() || d < 0.0 {
                    return Err(ReductionError::Invalid("distances must be finite and >= 0"));
                }
                if self.dist[b][a] != d {
                    return Err(ReductionError::Invalid("distance matrix must be symmetric"));
                }
            }
        }
        if self.matroid.ground_size() != n || !(0..n).all(|u| self.matroid.contains(u as u32)) {
            return Err(ReductionError::Invalid(
                "matroid ground set must be exactly the copy indices",
            ));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the full `O(n³)` triangle sweep.
    pub fn verify_metric(&self) -> Result<(), ReductionError> {
        self.validate()?;
        triangle_sweep(&self.dist)?;
        Ok(())
    }
}

/// Builds the k-center-under-partition-matroid instance whose good solutions
/// are fair center sets. The self-distance `ε·δ/β` keeps the copies a metric
/// while the optimal copy radius stays within `1 + ε/β` of the optimal
/// `α`-fair radius (at least one point is not a center, so the optimal
/// radius is at least `δ`).
pub fn reduce_kcenter(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
    beta: f64,
) -> Result<KCenterInstance, ReductionError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ReductionError::Invalid("epsilon must lie in (0, 1/2)"));
    }
    let delta = reduction_prologue(ds, k, beta)?;
    let regions = critical_regions(ds, k, alpha)?;
    let m = regions.m();
    let self_distance = epsilon * delta / beta;
    let (underlying, copy_map) = copy_layout(ds, &regions);
    let dist = copy_metric(ds, &underlying, self_distance);
    let matroid = copy_matroid(&copy_map, m, k)?;
    Ok(KCenterInstance {
        dist,
        matroid,
        copy_map,
        delta,
        self_distance,
        epsilon,
        beta,
        m,
        k,
    })
}

/// 3-approximation for k-center under a partition matroid.
///
/// Candidate radii are the pairwise distances in ascending order. Every
/// candidate at least the optimal radius admits a head matching (see the
/// module docs), so a *failing* candidate is always strictly below the
/// optimal radius. Feasibility need not be monotone below the optimum, but
/// binary search still lands on a candidate `R` that succeeds right after
/// one that fails — and the failing one pins the optimum strictly above it,
/// so `R` is at most the optimal radius (which is itself a candidate).
/// Returns the open copies (ascending) and their true covering radius,
/// which is at most `3R` ≤ 3× optimal.
pub fn kcenter_partition_matroid(
    inst: &KCenterInstance,
) -> Result<(Vec<usize>, f64), ReductionError> {
    inst.validate()?;
    let n = inst.len();
    let mut cands = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            cands.push(inst.dist[a][b]);
        }
    }
    cands.sort_unstable_by(f64::total_cmp);
    cands.dedup();

    if let Some(open) = match_heads(inst, cands[0]) {
        return finish(inst, open, cands[0]);
    }
    let (mut lo, mut hi) = (0, cands.len() - 1);
    if lo == hi {
        return Err(ReductionError::Infeasible);
    }
    let Some(mut best) = match_heads(inst, cands[hi]) else {
        return Err(ReductionError::Infeasible);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match match_heads(inst, cands[mid]) {
            Some(open) => {
                hi = mid;
                best = open;
            }
            None => lo = mid,
        }
    }
    finish(inst, best, cands[hi])
}

fn finish(
    inst: &KCenterInstance,
    open: Vec<usize>,
    accepted: f64,
) -> Result<(Vec<usize>, f64), ReductionError> {
    let radius = (0..inst.len())
        .map(|v| open.iter().map(|&u| inst.dist[v][u]).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max);
    if !approx_le(radius, 3.0 * accepted, 1e-9) {
        return Err(ReductionError::Internal("covering radius exceeds 3R"));
    }
    Ok((open, radius))
}

/// Greedy heads (pairwise > 2R apart, ascending index), then a max-flow
/// matching head → facility within R → part → budget. Returns the matched
/// facilities (ascending) when every head lands one. Deterministic: BFS
/// scans nodes in ascending order, so ties always break the same way.
fn match_heads(inst: &KCenterInstance, radius: f64) -> Option<Vec<usize>> {
    let n = inst.len();
    let mut heads: Vec<usize> = Vec::new();
    for v in 0..n {
        if heads.iter().all(|&h| inst.dist[v][h] > 2.0 * radius) {
            heads.push(v);
        }
    }
    let parts = inst.matroid.num_parts();
    let total_cap: usize =
        (0..parts).map(|i| inst.matroid.cap(i).min(inst.matroid.part(i).len())).sum();
    let h = heads.len();
    if h > total_cap {
        return None;
    }

    // Nodes: source, heads, facilities, parts, sink.
    let fac0 = 1 + h;
    let part0 = fac0 + n;
    let sink = part0 + parts;
    let nodes = sink + 1;
    let mut cap = vec![vec![0i64; nodes]; nodes];
    for idx in 0..h {
        cap[0][1 + idx] = 1;
    }
    for (idx, &v) in heads.iter().enumerate() {
        for u in 0..n {
            if inst.dist[v][u] <= radius {
                cap[1 + idx][fac0 + u] = 1;
            }
        }
    }
    for u in 0..n {
        let part = inst.matroid.part_of(u as u32).expect("ground was validated");
        cap[fac0 + u][part0 + part] = 1;
    }
    for i in 0..parts {
        cap[part0 + i][sink] = inst.matroid.cap(i) as i64;
    }

    let mut flow = 0usize;
    loop {
        let mut prev = vec![usize::MAX; nodes];
        prev[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for b in 0..nodes {
                if prev[b] == usize::MAX && cap[a][b] > 0 {
                    prev[b] = a;
                    queue.push_back(b);
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        // All source-side edges are unit, so each augmentation moves 1.
        let mut b = sink;
        while b != 0 {
            let a = prev[b];
            cap[a][b] -= 1;
            cap[b][a] += 1;
            b = a;
        }
        flow += 1;
    }
    if flow < h {
        return None;
    }
    let mut open = Vec::with_capacity(h);
    for idx in 0..h {
        for u in 0..n {
            // Residual on the reverse arc marks the facility this head took.
            if cap[fac0 + u][1 + idx] > 0 {
                open.push(u);
                break;
            }
        }
    }
    open.sort_unstable();
    open.dedup();
    Some(open)
}

/// See [`super::pad_ball_coverage`]; identical logic over the copy set.
pub fn pad_ball_coverage(inst: &KCenterInstance, chosen: &[usize]) -> Vec<usize> {
    pad_missing_balls(&inst.copy_map, inst.m, chosen)
}

/// See [`super::map_back`]; identical logic over the copy set.
pub fn map_back(inst: &KCenterInstance, chosen: &[usize]) -> Result<Vec<PointId>, ReductionError> {
    map_back_copies(&inst.copy_map, &inst.matroid, inst.m, inst.k, chosen)
}

/// The full k-center solver: critical regions → copy instance → thresholded
/// matching → back-mapping → audit. The returned centers are `3α`-fair and
/// their maximum distance is at most `3 + ε` times the optimal `α`-fair
/// k-center radius.
pub fn solve_fair_kcenter(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    epsilon: f64,
) -> Result<SolveReport, ReductionError> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(ReductionError::Invalid("alpha must be finite and >= 1"));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ReductionError::Invalid("epsilon must lie in (0, 1/2)"));
    }
    let n = ds.len();
    if k == 0 || k > n {
        return Err(ReductionError::Invalid("k must be between 1 and n"));
    }
    if k == n {
        return trivial_report(ds, k, alpha, epsilon, None);
    }
    const BETA: f64 = 3.0;
    let inst = reduce_kcenter(ds, k, alpha, epsilon, BETA)?;
    let (open, _) = kcenter_partition_matroid(&inst)?;
    let open = pad_ball_coverage(&inst, &open);
    let centers = map_back(&inst, &open)?;
    let cost = ds.max_distance_cost(&centers)?;

    // Each input point sits at least as close to a center as its pool copy
    // sits to an open copy, and padding only added facilities.
    let copy_radius = (0..inst.len())
        .map(|v| open.iter().map(|&u| inst.dist[v][u]).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max);
    if !approx_le(cost, copy_radius, 1e-9) {
        return Err(ReductionError::Internal(
            "mapped radius exceeds the copy radius",
        ));
    }
    let regions = critical_regions(ds, k, alpha)?;
    audited(
        ds,
        &regions,
        SolveReport {
            centers,
            cost,
            p: None,
            k,
            alpha,
            epsilon,
            beta: BETA,
            m: inst.m,
            fairness_max_ratio: 0.0,
            chain: None,
        },
    )
}
