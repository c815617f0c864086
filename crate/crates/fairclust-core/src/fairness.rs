//! Fair radii, critical regions, and fairness auditing.
//!
//! The *fair radius* `r(v)` of a point is the distance within which `v`
//! already has `⌈n/k⌉` points of the dataset (itself included): any
//! k-clustering must place some center "near" a typical point, and `r(v)`
//! makes that quantitative. A solution is `α`-fair when every point has a
//! center within `α·r(v)`.
//!
//! *Critical regions* are a small set of disjoint balls `B(c_i, α·r(c_i))`
//! with the property that opening one center inside every ball makes any
//! solution `3α`-fair. They drive the facility-location reduction.

use alloc::vec::Vec;

use crate::geometry::{Dataset, GeometryError, PointId};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FairnessError {
    #[error("k must satisfy 1 <= k <= n; got k={k}, n={n}")]
    BadK { k: usize, n: usize },
    #[error("alpha must be finite and >= 1")]
    BadAlpha,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Fair radii of every point for a given `k`.
#[derive(Clone, Debug)]
pub struct FairRadii {
    pub k: usize,
    /// `⌈n/k⌉`: how many points (self included) must lie within `r(v)`.
    pub threshold: usize,
    radii: Vec<f64>,
}

impl FairRadii {
    /// Radius by dense dataset index.
    pub fn radius(&self, idx: usize) -> f64 {
        self.radii[idx]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

/// `r(v)` = distance from `v` to its `⌈n/k⌉`-th closest point, counting `v`
/// itself at distance 0. Every ball `B(v, r(v))` therefore holds at least
/// `⌈n/k⌉` points; multiplicities are weight-agnostic.
pub fn fair_radii(ds: &Dataset, k: usize) -> Result<FairRadii, FairnessError> {
    let n = ds.len();
    if k < 1 || k > n {
        return Err(FairnessError::BadK { k, n });
    }
    let threshold = n.div_ceil(k);
    let mut radii = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for v in 0..n {
        dists.clear();
        for u in 0..n {
            dists.push(ds.dist_idx(v, u));
        }
        dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        radii.push(dists[threshold - 1]);
    }
    Ok(FairRadii { k, threshold, radii })
}

/// Disjoint balls selected greedily by smallest fair radius.
#[derive(Clone, Debug)]
pub struct CriticalRegions {
    pub alpha: f64,
    pub k: usize,
    /// Region centers (dataset indices) in selection order, which is
    /// nondecreasing in `r`.
    centers: Vec<usize>,
    /// Ball radii `α·r(c_i)`, aligned with `centers`.
    radii: Vec<f64>,
    /// Ball member lists (dataset indices, ascending), aligned with
    /// `centers`. Balls are pairwise disjoint.
    members: Vec<Vec<usize>>,
}

impl CriticalRegions {
    /// Number of regions `m ≤ k`.
    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn center_idx(&self, i: usize) -> usize {
        self.centers[i]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    pub fn center_ids(&self, ds: &Dataset) -> Vec<PointId> {
        self.centers.iter().map(|&c| ds.id_of(c)).collect()
    }
}

/// Greedy critical-region selection.
///
/// Repeatedly takes the uncovered point `c` with the smallest fair radius
/// (ties: smallest point id), opens the region `B(c, α·r(c))`, and marks as
/// covered every uncovered `x` with `d(x,c) ≤ 2α·r(x)`. On return:
///
/// * every point has some region center within `2α·r(x)`;
/// * distinct region centers satisfy `d(c_i,c_j) > 2α·max(r(c_i), r(c_j))`,
///   so the balls are pairwise disjoint;
/// * at most `k` regions exist (each disjoint ball `B(c, r(c))` holds
///   `⌈n/k⌉` points of a universe of `n`).
pub fn critical_regions(
    ds: &Dataset,
    k: usize,
    alpha: f64,
) -> Result<CriticalRegions, FairnessError> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(FairnessError::BadAlpha);
    }
    let fr = fair_radii(ds, k)?;
    let n = ds.len();
    let mut covered = alloc::vec![false; n];
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    let mut members = Vec::new();
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if covered[v] {
                continue;
            }
            pick = Some(match pick {
                None => v,
                Some(best) => {
                    let better = fr.radius(v) < fr.radius(best)
                        || (fr.radius(v) == fr.radius(best) && ds.id_of(v) < ds.id_of(best));
                    if better {
                        v
                    } else {
                        best
                    }
                }
            });
        }
        let Some(c) = pick else { break };
        let ball_radius = alpha * fr.radius(c);
        centers.push(c);
        radii.push(ball_radius);
        members.push((0..n).filter(|&x| ds.dist_idx(x, c) <= ball_radius).collect());
        for x in 0..n {
            if !covered[x] && ds.dist_idx(x, c) <= 2.0 * alpha * fr.radius(x) {
                covered[x] = true;
            }
        }
    }
    if centers.len() > k {
        return Err(FairnessError::Internal("more critical regions than k"));
    }
    Ok(CriticalRegions { alpha, k, centers, radii, members })
}

/// Per-point fairness ratios `d(v, centers) / r(v)` and their maximum.
///
/// A point at distance 0 from the center set has ratio 0 even when
/// `r(v) = 0`; a point with `r(v) = 0` and positive distance has ratio
/// `+∞`.
#[derive(Clone, Debug)]
pub struct FairnessAudit {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

pub fn fairness_audit(
    ds: &Dataset,
    centers: &[PointId],
    k: usize,
) -> Result<FairnessAudit, FairnessError> {
    if centers.is_empty() {
        return Err(GeometryError::EmptyCenters.into());
    }
    let fr = fair_radii(ds, k)?;
    let mut idxs = Vec::with_capacity(centers.len());
    for &c in centers {
        idxs.push(ds.index_of(c)?);
    }
    let mut ratios = Vec::with_capacity(ds.len());
    let mut max_ratio = 0.0f64;
    for v in 0..ds.len() {
        let d = idxs.iter().map(|&c| ds.dist_idx(v, c)).fold(f64::INFINITY, f64::min);
        let ratio = if d == 0.0 { 0.0 } else { d / fr.radius(v) };
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        ratios.push(ratio);
    }
    Ok(FairnessAudit { ratios, max_ratio })
}

/// Does `centers` open at least one center inside every critical ball?
/// (Ball membership is non-strict.) Any such set is `3α`-fair.
pub fn feasible_wrt_regions(
    ds: &Dataset,
    regions: &CriticalRegions,
    centers: &[PointId],
) -> Result<bool, FairnessError> {
    let mut idxs = Vec::with_capacity(centers.len());
    for &c in centers {
        idxs.push(ds.index_of(c)?);
    }
    for i in 0..regions.m() {
        let c_i = regions.center_idx(i);
        let hit = idxs.iter().any(|&c| ds.dist_idx(c, c_i) <= regions.radius(i));
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}
