//! Exhaustive reference solvers for small instances.
//!
//! Everything here trades time for obviousness: enumerate the whole search
//! space, keep the best candidate, report it with the space's size. Hard
//! caps turn runaway inputs into [`OracleError::TooLarge`] instead of
//! unbounded loops. The rounding pipeline is validated *against* these
//! values, never the other way around.

use alloc::vec;
use alloc::vec::Vec;

use crate::facility_location::FlInstance;
use crate::fairness::{fair_radii, FairnessError};
use crate::geometry::{CostParams, Dataset, GeometryError, PointId};
use crate::lp::{Grid, LinearProgram};
use crate::math::pow;

/// Enumeration caps: points for fair clustering, centers, facilities, and
/// grid dimensions. Chosen so the worst space stays around half a million
/// candidates.
const MAX_POINTS: usize = 16;
const MAX_CENTERS: usize = 4;
const MAX_FACILITIES: usize = 14;
const MAX_GRID_VARS: usize = 12;

/// Residual tolerance when testing grid points against polytope rows.
const GRID_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{what} has size {size}, oracle cap is {max}")]
    TooLarge {
        what: &'static str,
        size: usize,
        max: usize,
    },
    #[error("invalid oracle input: {0}")]
    Invalid(&'static str),
    #[error("fairness error: {0}")]
    Fairness(#[from] FairnessError),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
}

/// Optimal value, with infeasibility as an explicit marker rather than a
/// sentinel number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleValue {
    Finite(f64),
    Infeasible,
}

impl OracleValue {
    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            OracleValue::Finite(v) => Some(v),
            OracleValue::Infeasible => None,
        }
    }
}

/// What the optimal candidate was.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleWitness {
    /// Center point ids (fair clustering / fair center oracles).
    Centers(Vec<PointId>),
    /// Open facility indices (facility location oracle).
    Facilities(Vec<usize>),
    /// Grid coordinates (polytope grid oracle).
    GridPoint(Vec<f64>),
    /// No feasible candidate existed.
    None,
}

/// Result of one exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: OracleValue,
    pub witness: OracleWitness,
    /// Number of candidates examined (the entire space, by construction).
    pub search_space: u64,
    /// Wall-clock duration of the search; absent without the `std` feature.
    pub elapsed: Option<core::time::Duration>,
}

#[cfg(feature = "std")]
fn now() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(not(feature = "std"))]
fn now() -> Option<core::convert::Infallible> {
    None
}

#[cfg(feature = "std")]
fn elapsed_since(start: Option<std::time::Instant>) -> Option<core::time::Duration> {
    start.map(|s| s.elapsed())
}

#[cfg(not(feature = "std"))]
fn elapsed_since(_: Option<core::convert::Infallible>) -> Option<core::time::Duration> {
    None
}

/// Iterates all subsets of `0..n` with `1..=max_size` elements, in ascending
/// bitmask order (so ties resolve to the lexicographically-first witness).
fn for_each_subset(n: usize, max_size: usize, mut f: impl FnMut(&[usize])) -> u64 {
    let mut buf: Vec<usize> = Vec::with_capacity(max_size);
    let mut examined = 0u64;
    for mask in 1u32..(1u32 << n) {
        if (mask.count_ones() as usize) > max_size {
            continue;
        }
        buf.clear();
        for i in 0..n {
            if mask & (1 << i) != 0 {
                buf.push(i);
            }
        }
        examined += 1;
        f(&buf);
    }
    examined
}

/// Exact optimum of fair clustering: minimum powered `ℓp` cost over all
/// center subsets of size at most `k` that are `alpha`-fair (every point
/// has a center within `alpha` times its fair radius).
///
/// `alpha` may drop below 1 here — useful for exercising infeasibility —
/// but must be positive.
pub fn oracle_fair_clustering(
    ds: &Dataset,
    k: usize,
    alpha: f64,
    params: &CostParams,
) -> Result<OracleResult, OracleError> {
    let (radii, start) = fair_oracle_prologue(ds, k, alpha)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let searched = for_each_subset(ds.len(), k, |subset| {
        if !is_alpha_fair(ds, &radii, subset, alpha) {
            return;
        }
        let mut total = 0.0;
        for v in 0..ds.len() {
            let d = nearest_distance(ds, v, subset);
            total += ds.points()[v].weight * pow(d, params.p);
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, subset.to_vec()));
        }
    });
    Ok(finish_fair_oracle(ds, best, searched, start))
}

/// Exact optimum of fair center: minimum over `alpha`-fair subsets of the
/// maximum point-to-center distance.
pub fn oracle_fair_kcenter(
    ds: &Dataset,
    k: usize,
    alpha: f64,
) -> Result<OracleResult, OracleError> {
    let (radii, start) = fair_oracle_prologue(ds, k, alpha)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let searched = for_each_subset(ds.len(), k, |subset| {
        if !is_alpha_fair(ds, &radii, subset, alpha) {
            return;
        }
        let mut worst = 0.0f64;
        for v in 0..ds.len() {
            let d = nearest_distance(ds, v, subset);
            if d > worst {
                worst = d;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((worst, subset.to_vec()));
        }
    });
    Ok(finish_fair_oracle(ds, best, searched, start))
}

#[cfg(feature = "std")]
type Clock = Option<std::time::Instant>;
#[cfg(not(feature = "std"))]
type Clock = Option<core::convert::Infallible>;

fn fair_oracle_prologue(
    ds: &Dataset,
    k: usize,
    alpha: f64,
) -> Result<(Vec<f64>, Clock), OracleError> {
    if ds.len() > MAX_POINTS {
        return Err(OracleError::TooLarge {
            what: "point set",
            size: ds.len(),
            max: MAX_POINTS,
        });
    }
    if k > MAX_CENTERS {
        return Err(OracleError::TooLarge {
            what: "center count",
            size: k,
            max: MAX_CENTERS,
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(OracleError::Invalid("alpha must be positive and finite"));
    }
    let radii = fair_radii(ds, k)?;
    let r: Vec<f64> = (0..ds.len()).map(|v| radii.radius(v)).collect();
    Ok((r, now()))
}

fn is_alpha_fair(ds: &Dataset, radii: &[f64], subset: &[usize], alpha: f64) -> bool {
    (0..ds.len()).all(|v| nearest_distance(ds, v, subset) <= alpha * radii[v])
}

fn nearest_distance(ds: &Dataset, v: usize, subset: &[usize]) -> f64 {
    subset
        .iter()
        .map(|&c| ds.dist_idx(v, c))
        .fold(f64::INFINITY, f64::min)
}

fn finish_fair_oracle(
    ds: &Dataset,
    best: Option<(f64, Vec<usize>)>,
    searched: u64,
    start: Clock,
) -> OracleResult {
    let (value, witness) = match best {
        Some((v, idxs)) => (
            OracleValue::Finite(v),
            OracleWitness::Centers(idxs.iter().map(|&i| ds.points()[i].id).collect()),
        ),
        None => (OracleValue::Infeasible, OracleWitness::None),
    };
    OracleResult {
        value,
        witness,
        search_space: searched,
        elapsed: elapsed_since(start),
    }
}

/// Exact optimum of facility location under the partition matroid: for every
/// independent facility set, each client pays its nearest open facility;
/// openings are added on top.
pub fn oracle_matroid_fl(inst: &FlInstance) -> Result<OracleResult, OracleError> {
    let nf = inst.num_facilities();
    if nf > MAX_FACILITIES {
        return Err(OracleError::TooLarge {
            what: "facility set",
            size: nf,
            max: MAX_FACILITIES,
        });
    }
    let start = now();
    let p = inst.params().p;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut searched = 0u64;
    for mask in 1u32..(1u32 << nf) {
        searched += 1;
        let subset: Vec<usize> = (0..nf).filter(|&u| mask & (1 << u) != 0).collect();
        let ids: Vec<u32> = subset.iter().map(|&u| u as u32).collect();
        if !inst
            .matroid()
            .is_independent(&ids)
            .expect("facility indices are ground elements")
        {
            continue;
        }
        let mut total: f64 = subset.iter().map(|&u| inst.opening(u)).sum();
        for v in 0..inst.num_clients() {
            let w = inst.demands()[v];
            if w == 0.0 {
                continue;
            }
            let d = subset
                .iter()
                .map(|&u| inst.d_cf(v, u))
                .fold(f64::INFINITY, f64::min);
            total += w * pow(d, p);
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, subset));
        }
    }
    let (value, witness) = match best {
        Some((v, subset)) => (OracleValue::Finite(v), OracleWitness::Facilities(subset)),
        None => (OracleValue::Infeasible, OracleWitness::None),
    };
    Ok(OracleResult {
        value,
        witness,
        search_space: searched,
        elapsed: elapsed_since(start),
    })
}

/// Exhaustive minimum of an LP objective (plus `constant`) over the grid
/// points inside the feasible region, feasibility meaning every row and
/// bound violated by at most a scaled `1e-9`.
///
/// `Grid::Half` tries `{0, ½, 1} ∩ [lower, upper]` per coordinate,
/// `Grid::Unit` tries `{0, 1}`. Ties resolve to the lexicographically
/// smallest point.
pub fn oracle_grid_min(
    lp: &LinearProgram,
    constant: f64,
    grid: Grid,
) -> Result<OracleResult, OracleError> {
    let n = lp.num_variables();
    if n > MAX_GRID_VARS {
        return Err(OracleError::TooLarge {
            what: "grid dimension",
            size: n,
            max: MAX_GRID_VARS,
        });
    }
    if n == 0 {
        return Err(OracleError::Invalid("grid oracle needs at least one variable"));
    }
    let start = now();
    let levels: &[f64] = match grid {
        Grid::Half => &[0.0, 0.5, 1.0],
        Grid::Unit => &[0.0, 1.0],
    };
    let choices: Vec<Vec<f64>> = lp
        .variables
        .iter()
        .map(|v| {
            levels
                .iter()
                .copied()
                .filter(|&g| g >= v.lower && g <= v.upper)
                .collect()
        })
        .collect();
    if choices.iter().any(|c| c.is_empty()) {
        return Err(OracleError::Invalid("a variable's box excludes every grid level"));
    }

    let mut point = vec_of(n, |i| choices[i][0]);
    let mut cursor = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut searched = 0u64;
    loop {
        searched += 1;
        if lp.max_scaled_residual(&point) <= GRID_FEAS_TOL {
            let val = lp.objective_value(&point) + constant;
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, point.clone()));
            }
        }
        // Odometer increment, most-significant coordinate first so the scan
        // is lexicographic.
        let mut i = n;
        loop {
            if i == 0 {
                let (value, witness) = match best {
                    Some((v, pt)) => (OracleValue::Finite(v), OracleWitness::GridPoint(pt)),
                    None => (OracleValue::Infeasible, OracleWitness::None),
                };
                return Ok(OracleResult {
                    value,
                    witness,
                    search_space: searched,
                    elapsed: elapsed_since(start),
                });
            }
            i -= 1;
            if cursor[i] + 1 < choices[i].len() {
                cursor[i] += 1;
                point[i] = choices[i][cursor[i]];
                break;
            }
            cursor[i] = 0;
            point[i] = choices[i][0];
        }
    }
}

fn vec_of(n: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use crate::facility_location::{
        build_h_lp, build_t_lp, consolidate, euclidean_test_instance, eval_h, eval_t,
        half_integral_round, random_test_instance, select_core_clients, solve_lp_relaxation,
        FlOptions,
    };
    use crate::geometry::Point;
    use crate::lp::{Constraint, Variable};
    use crate::matroid::PartitionMatroid;

    fn line(coords: &[f64]) -> Dataset {
        let pts = coords
            .iter()
            .enumerate()
            .map(|(i, &x)| Point::unit(i as u32, vec![x]))
            .collect();
        Dataset::euclidean(pts).unwrap()
    }

    #[test]
    fn all_points_as_centers_cost_zero() {
        let ds = line(&[0.0, 3.0, 7.0, 20.0]);
        let res =
            oracle_fair_clustering(&ds, 4, 1.0, &CostParams::with_p(2.0).unwrap()).unwrap();
        assert_eq!(res.value, OracleValue::Finite(0.0));
        assert_eq!(res.witness, OracleWitness::Centers(vec![0, 1, 2, 3]));
    }

    #[test]
    fn tiny_alpha_yields_infeasible_marker() {
        // Two points at distance 1, k = 1: fair radii are 1, and no single
        // center sits within 0.4 of both.
        let ds = line(&[0.0, 1.0]);
        let res =
            oracle_fair_clustering(&ds, 1, 0.4, &CostParams::with_p(1.0).unwrap()).unwrap();
        assert_eq!(res.value, OracleValue::Infeasible);
        assert_eq!(res.witness, OracleWitness::None);
    }

    #[test]
    fn two_cluster_instance_frozen_optimum() {
        // Two tight four-point clusters; fair radii (threshold 4) allow the
        // natural centers, and the powered l2 optimum is 6 per cluster.
        let ds = line(&[0.0, 1.0, 2.0, 3.0, 100.0, 101.0, 102.0, 103.0]);
        let res =
            oracle_fair_clustering(&ds, 2, 1.0, &CostParams::with_p(2.0).unwrap()).unwrap();
        assert_eq!(res.value, OracleValue::Finite(12.0));
        assert_eq!(res.witness, OracleWitness::Centers(vec![1, 5]));
        assert_eq!(res.search_space, 8 + 28); // size-1 and size-2 subsets
    }

    #[test]
    fn kcenter_oracle_minimizes_the_radius() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0, 100.0, 101.0, 102.0, 103.0]);
        let res = oracle_fair_kcenter(&ds, 2, 1.0).unwrap();
        // Center 1 or 2 serves its cluster within distance 2; the frozen
        // witness is the lexicographically-first optimum.
        assert_eq!(res.value, OracleValue::Finite(2.0));
        assert_eq!(res.witness, OracleWitness::Centers(vec![1, 5]));
    }

    #[test]
    fn oracle_caps_fail_fast() {
        let ds = line(&[0.0; 17]);
        assert!(matches!(
            oracle_fair_clustering(&ds, 2, 1.0, &CostParams::with_p(1.0).unwrap()),
            Err(OracleError::TooLarge { what: "point set", .. })
        ));
        let ds = line(&[0.0, 1.0]);
        assert!(matches!(
            oracle_fair_kcenter(&ds, 5, 1.0),
            Err(OracleError::TooLarge { what: "center count", .. })
        ));
    }

    #[test]
    fn fair_oracle_is_permutation_invariant() {
        let base = [0.0, 1.5, 2.0, 8.0, 9.0, 9.5];
        let perm = [4usize, 0, 5, 2, 1, 3];
        let ds_a = line(&base);
        let permuted: Vec<f64> = perm.iter().map(|&i| base[i]).collect();
        let ds_b = line(&permuted);
        let params = CostParams::with_p(2.0).unwrap();
        for k in 1..=3usize {
            let a = oracle_fair_clustering(&ds_a, k, 1.0, &params).unwrap();
            let b = oracle_fair_clustering(&ds_b, k, 1.0, &params).unwrap();
            assert_eq!(a.value, b.value, "k = {k}");
        }
    }

    #[test]
    fn matroid_fl_oracle_trivial_cases() {
        // All distances/openings zero: optimum 0 with the first singleton.
        let inst = euclidean_test_instance(
            &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            2,
            vec![0.0, 0.0],
            vec![1.0],
            2.0,
            PartitionMatroid::uniform(vec![0, 1], 2),
        );
        let res = oracle_matroid_fl(&inst).unwrap();
        assert_eq!(res.value, OracleValue::Finite(0.0));
        assert_eq!(res.witness, OracleWitness::Facilities(vec![0]));
        assert_eq!(res.search_space, 3);

        // Cap 0 on the only part: nothing can open.
        let closed = euclidean_test_instance(
            &[(0.0, 0.0), (1.0, 0.0)],
            1,
            vec![0.0],
            vec![1.0],
            1.0,
            PartitionMatroid::new(vec![vec![0]], vec![0]).unwrap(),
        );
        assert_eq!(oracle_matroid_fl(&closed).unwrap().value, OracleValue::Infeasible);
    }

    #[test]
    fn matroid_fl_oracle_single_choice() {
        // One facility, cap 1: its cost is the answer.
        let inst = euclidean_test_instance(
            &[(0.0, 0.0), (3.0, 0.0)],
            1,
            vec![5.0],
            vec![2.0],
            2.0,
            PartitionMatroid::uniform(vec![0], 1),
        );
        let res = oracle_matroid_fl(&inst).unwrap();
        assert_eq!(res.value, OracleValue::Finite(5.0 + 2.0 * 9.0));
        assert_eq!(res.witness, OracleWitness::Facilities(vec![0]));
    }

    #[test]
    fn lp_relaxation_lower_bounds_the_fl_oracle() {
        for seed in 0..25u64 {
            let p = [1.0, 2.0, 3.0][(seed % 3) as usize];
            let inst = random_test_instance(seed, 6, 6, p);
            let (_, z_lp) = solve_lp_relaxation(&inst).unwrap();
            let oracle = oracle_matroid_fl(&inst).unwrap().value.finite().unwrap();
            assert!(
                crate::math::approx_le(z_lp, oracle, 1e-9),
                "seed {seed}: z_lp {z_lp} > oracle {oracle}"
            );
        }
    }

    #[test]
    fn grid_min_on_plain_box() {
        let lp = LinearProgram::new(
            vec![Variable::unit_box("a", 1.0), Variable::unit_box("b", 1.0)],
            vec![],
        );
        let res = oracle_grid_min(&lp, 0.0, Grid::Unit).unwrap();
        assert_eq!(res.value, OracleValue::Finite(0.0));
        assert_eq!(res.witness, OracleWitness::GridPoint(vec![0.0, 0.0]));
        assert_eq!(res.search_space, 4);
    }

    #[test]
    fn grid_min_reports_empty_feasible_set() {
        let lp = LinearProgram::new(
            vec![Variable::unit_box("a", 1.0)],
            vec![Constraint::eq(vec![(0, 1.0)], 0.25)],
        );
        let res = oracle_grid_min(&lp, 0.0, Grid::Half).unwrap();
        assert_eq!(res.value, OracleValue::Infeasible);
    }

    #[test]
    fn grid_min_matches_rounding_lp_minimizers() {
        // The T- and H-programs are solved by LP + snap in the pipeline; the
        // grid oracle must land on the same values independently.
        let opts = FlOptions::default();
        for seed in 0..12u64 {
            let p = [1.0, 2.0][(seed % 2) as usize];
            let inst = random_test_instance(seed, 4, 5, p);
            let (sol, _) = solve_lp_relaxation(&inst).unwrap();
            let cons = consolidate(&inst, &sol).unwrap();
            let nbhd =
                crate::facility_location::build_neighborhoods(&inst, &cons, &sol).unwrap();
            let half = half_integral_round(&inst, &cons, &nbhd, &sol, &opts).unwrap();

            let (t_lp, t_const) = build_t_lp(&inst, &cons, &nbhd);
            let t_oracle = oracle_grid_min(&t_lp, t_const, Grid::Half).unwrap();
            let t_val = eval_t(&inst, &cons, &nbhd, &half.half.y);
            let t_min = t_oracle.value.finite().expect("y'' is a feasible grid point");
            assert!(
                crate::math::approx_eq(t_min, t_val, 1e-9),
                "seed {seed}: T grid {t_min} vs pipeline {t_val}"
            );

            let core = select_core_clients(&inst, &cons, &half.half).unwrap();
            let int_out = crate::facility_location::integral_round(
                &inst, &cons, &core, &half.half, &opts,
            )
            .unwrap();
            let (h_lp, h_const) = build_h_lp(&inst, &cons, &core);
            let h_oracle = oracle_grid_min(&h_lp, h_const, Grid::Unit).unwrap();
            let h_val = eval_h(&inst, &cons, &core, &int_out.integral.y);
            let h_min = h_oracle.value.finite().expect("y~ is a feasible grid point");
            assert!(
                crate::math::approx_eq(h_min, h_val, 1e-9),
                "seed {seed}: H grid {h_min} vs pipeline {h_val}"
            );
        }
    }

    #[test]
    fn grid_dimension_cap() {
        let vars: Vec<Variable> = (0..13)
            .map(|i| Variable::unit_box(format!("v{i}"), 1.0))
            .collect();
        let lp = LinearProgram::new(vars, vec![]);
        assert!(matches!(
            oracle_grid_min(&lp, 0.0, Grid::Unit),
            Err(OracleError::TooLarge { what: "grid dimension", .. })
        ));
    }
}
