//! Point sets, metrics, and ℓp cost primitives.
//!
//! A [`Dataset`] is an ordered list of weighted points with a metric that is
//! either Euclidean (from coordinates) or an explicit distance matrix.
//! Points carry stable integer ids; all other modules address points through
//! those ids at their boundaries and through dense indices internally.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math;

/// Stable identifier of a point in a [`Dataset`].
pub type PointId = u32;

/// A weighted point. `coords` may be empty when the dataset carries an
/// explicit distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub id: PointId,
    pub weight: f64,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(id: PointId, weight: f64, coords: Vec<f64>) -> Self {
        Point { id, weight, coords }
    }

    /// Unit-weight point, the common case.
    pub fn unit(id: PointId, coords: Vec<f64>) -> Self {
        Point::new(id, 1.0, coords)
    }
}

/// Cost parameters: the ℓp exponent and the λ knob of the power triangle
/// inequality. λ is used only by the inequality utilities and the final
/// conversion step (which fixes λ = 7).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    pub p: f64,
    pub lambda: f64,
}

impl CostParams {
    pub fn new(p: f64, lambda: f64) -> Result<Self, GeometryError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(GeometryError::InvalidParams("p must be finite and >= 1"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(GeometryError::InvalidParams("lambda must be finite and > 0"));
        }
        Ok(CostParams { p, lambda })
    }

    /// Parameters for exponent `p` with the conversion default λ = 7.
    pub fn with_p(p: f64) -> Result<Self, GeometryError> {
        CostParams::new(p, 7.0)
    }
}

#[derive(Clone, Debug)]
enum Metric {
    Euclidean,
    /// Row-major `n × n` distance matrix.
    Explicit(Vec<f64>),
}

/// An immutable point set with a metric. Construction validates everything
/// the solvers rely on: unique ids, consistent dimensions, finite
/// nonnegative weights, and (for explicit matrices) metric axioms.
#[derive(Clone, Debug)]
pub struct Dataset {
    points: Vec<Point>,
    metric: Metric,
    index: BTreeMap<PointId, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("dataset must contain at least one point")]
    EmptyDataset,
    #[error("duplicate point id {0}")]
    DuplicateId(PointId),
    #[error("point id {0} not in dataset")]
    UnknownId(PointId),
    #[error("point {0} has a different dimension than point {1}")]
    DimensionMismatch(PointId, PointId),
    #[error("point {0} has a non-finite coordinate")]
    NonFiniteCoordinate(PointId),
    #[error("point {0} has an invalid weight (must be finite and >= 0)")]
    InvalidWeight(PointId),
    #[error("distance matrix must be {0}x{0}")]
    MatrixShape(usize),
    #[error("distance matrix entry ({0},{1}) is negative or not finite")]
    MatrixEntry(usize, usize),
    #[error("distance matrix is not symmetric at ({0},{1})")]
    MatrixAsymmetric(usize, usize),
    #[error("distance matrix diagonal entry {0} is nonzero")]
    MatrixDiagonal(usize),
    #[error("triangle inequality violated for indices ({0},{1},{2})")]
    TriangleViolation(usize, usize, usize),
    #[error("centers must be nonempty")]
    EmptyCenters,
    #[error("{0}")]
    InvalidParams(&'static str),
}

impl Dataset {
    /// Dataset with the Euclidean metric over `points` coordinates.
    pub fn euclidean(points: Vec<Point>) -> Result<Self, GeometryError> {
        let index = Self::build_index(&points)?;
        let dim = points[0].coords.len();
        for p in &points {
            if p.coords.len() != dim {
                return Err(GeometryError::DimensionMismatch(p.id, points[0].id));
            }
            if p.coords.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::NonFiniteCoordinate(p.id));
            }
        }
        Ok(Dataset { points, metric: Metric::Euclidean, index })
    }

    /// Dataset with an explicit distance matrix, `matrix[i][j]` being the
    /// distance between `points[i]` and `points[j]`.
    ///
    /// Symmetry, zero diagonal, and nonnegativity are always validated. The
    /// O(n³) triangle-inequality check runs only when `check_triangle` is
    /// set; callers should set it for desk-scale inputs (n ≤ 500 or so).
    pub fn explicit(
        points: Vec<Point>,
        matrix: &[Vec<f64>],
        check_triangle: bool,
    ) -> Result<Self, GeometryError> {
        let index = Self::build_index(&points)?;
        let n = points.len();
        if matrix.len() != n {
            return Err(GeometryError::MatrixShape(n));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(GeometryError::MatrixShape(n));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(GeometryError::MatrixEntry(i, j));
                }
                flat.push(d);
            }
        }
        for i in 0..n {
            if flat[i * n + i] != 0.0 {
                return Err(GeometryError::MatrixDiagonal(i));
            }
            for j in (i + 1)..n {
                if flat[i * n + j] != flat[j * n + i] {
                    return Err(GeometryError::MatrixAsymmetric(i, j));
                }
            }
        }
        if check_triangle {
            for i in 0..n {
                for j in 0..n {
                    let dij = flat[i * n + j];
                    for l in 0..n {
                        if dij > flat[i * n + l] + flat[l * n + j] {
                            return Err(GeometryError::TriangleViolation(i, j, l));
                        }
                    }
                }
            }
        }
        Ok(Dataset { points, metric: Metric::Explicit(flat), index })
    }

    fn build_index(points: &[Point]) -> Result<BTreeMap<PointId, usize>, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyDataset);
        }
        let mut index = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id, i).is_some() {
                return Err(GeometryError::DuplicateId(p.id));
            }
            if !p.weight.is_finite() || p.weight < 0.0 {
                return Err(GeometryError::InvalidWeight(p.id));
            }
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires n >= 1
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn id_of(&self, idx: usize) -> PointId {
        self.points[idx].id
    }

    pub fn index_of(&self, id: PointId) -> Result<usize, GeometryError> {
        self.index.get(&id).copied().ok_or(GeometryError::UnknownId(id))
    }

    /// Distance by dense index. Panics on out-of-range indices.
    pub fn dist_idx(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Euclidean => {
                let (a, b) = (&self.points[i].coords, &self.points[j].coords);
                let mut s = 0.0;
                for (x, y) in a.iter().zip(b.iter()) {
                    let d = x - y;
                    s += d * d;
                }
                math::sqrt(s)
            }
            Metric::Explicit(flat) => flat[i * self.points.len() + j],
        }
    }

    /// Distance by point id.
    pub fn distance(&self, a: PointId, b: PointId) -> Result<f64, GeometryError> {
        Ok(self.dist_idx(self.index_of(a)?, self.index_of(b)?))
    }

    /// Minimum distance over distinct point pairs; `None` when n < 2.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist_idx(i, j);
                if d < best {
                    best = d;
                }
            }
        }
        Some(best)
    }

    /// Weighted ℓp clustering cost: `Σ_v w(v) · min_{c ∈ centers} d(v,c)^p`.
    pub fn clustering_cost(
        &self,
        centers: &[PointId],
        params: &CostParams,
    ) -> Result<f64, GeometryError> {
        if centers.is_empty() {
            return Err(GeometryError::EmptyCenters);
        }
        let mut idxs = Vec::with_capacity(centers.len());
        for &c in centers {
            idxs.push(self.index_of(c)?);
        }
        let mut total = 0.0;
        for v in 0..self.len() {
            let mut best = f64::INFINITY;
            for &c in &idxs {
                let d = self.dist_idx(v, c);
                if d < best {
                    best = d;
                }
            }
            total += self.points[v].weight * math::pow(best, params.p);
        }
        Ok(total)
    }

    /// Max distance from any point to its nearest center (the k-center
    /// objective).
    pub fn max_distance_cost(&self, centers: &[PointId]) -> Result<f64, GeometryError> {
        if centers.is_empty() {
            return Err(GeometryError::EmptyCenters);
        }
        let mut idxs = Vec::with_capacity(centers.len());
        for &c in centers {
            idxs.push(self.index_of(c)?);
        }
        let mut worst = 0.0f64;
        for v in 0..self.len() {
            let mut best = f64::INFINITY;
            for &c in &idxs {
                let d = self.dist_idx(v, c);
                if d < best {
                    best = d;
                }
            }
            if best > worst {
                worst = best;
            }
        }
        Ok(worst)
    }

    /// Merge points at pairwise distance zero, summing their weights into the
    /// first (lowest-index) representative. Returns the deduplicated dataset
    /// and a map from each absorbed id to the id that kept its weight.
    ///
    /// Needed before the facility-location reduction, which requires a
    /// strictly positive minimum pairwise distance.
    pub fn merge_duplicates(&self) -> (Dataset, BTreeMap<PointId, PointId>) {
        let n = self.len();
        let mut absorbed_by: Vec<Option<usize>> = alloc::vec![None; n];
        let mut merged_weight: Vec<f64> = self.points.iter().map(|p| p.weight).collect();
        for i in 0..n {
            if absorbed_by[i].is_some() {
                continue;
            }
            for j in (i + 1)..n {
                if absorbed_by[j].is_none() && self.dist_idx(i, j) == 0.0 {
                    absorbed_by[j] = Some(i);
                    merged_weight[i] += merged_weight[j];
                }
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&i| absorbed_by[i].is_none()).collect();
        let mut map = BTreeMap::new();
        for j in 0..n {
            if let Some(i) = absorbed_by[j] {
                map.insert(self.points[j].id, self.points[i].id);
            }
        }
        let points: Vec<Point> = kept
            .iter()
            .map(|&i| Point::new(self.points[i].id, merged_weight[i], self.points[i].coords.clone()))
            .collect();
        let metric = match &self.metric {
            Metric::Euclidean => Metric::Euclidean,
            Metric::Explicit(flat) => {
                let m = kept.len();
                let mut sub = Vec::with_capacity(m * m);
                for &i in &kept {
                    for &j in &kept {
                        sub.push(flat[i * n + j]);
                    }
                }
                Metric::Explicit(sub)
            }
        };
        let index = kept
            .iter()
            .enumerate()
            .map(|(new_i, &old_i)| (self.points[old_i].id, new_i))
            .collect();
        (Dataset { points, metric, index }, map)
    }
}

/// Upper bound on `d(u,v)^p` through a waypoint `w`:
/// `(1+λ)^{p−1}·d(u,w)^p + ((1+λ)/λ)^{p−1}·d(w,v)^p`.
///
/// Valid for any metric distances and `p ≥ 1`, `λ > 0`; with λ = 1 it
/// specializes to `2^{p−1}(a^p + b^p)`.
pub fn power_triangle_bound(d_uw: f64, d_wv: f64, params: &CostParams) -> f64 {
    let CostParams { p, lambda } = *params;
    math::pow(1.0 + lambda, p - 1.0) * math::pow(d_uw, p)
        + math::pow((1.0 + lambda) / lambda, p - 1.0) * math::pow(d_wv, p)
}

/// Upper bound on `(d1+d2+d3)^p` for a three-hop path:
/// `3^{p−1}·(d1^p + d2^p + d3^p)`.
pub fn two_hop_bound(d1: f64, d2: f64, d3: f64, p: f64) -> f64 {
    math::pow(3.0, p - 1.0) * (math::pow(d1, p) + math::pow(d2, p) + math::pow(d3, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::approx_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn line(coords: &[f64]) -> Dataset {
        let pts = coords
            .iter()
            .enumerate()
            .map(|(i, &x)| Point::unit(i as PointId, alloc::vec![x]))
            .collect();
        Dataset::euclidean(pts).unwrap()
    }

    #[test]
    fn identical_points_have_distance_zero() {
        let ds = line(&[1.5, 1.5]);
        assert_eq!(ds.distance(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_distance_matches_hand_value() {
        let ds = Dataset::euclidean(alloc::vec![
            Point::unit(0, alloc::vec![0.0, 0.0]),
            Point::unit(1, alloc::vec![3.0, 4.0]),
        ])
        .unwrap();
        assert_eq!(ds.distance(0, 1).unwrap(), 5.0);
    }

    #[test]
    fn unknown_id_is_rejected() {
        let ds = line(&[0.0, 1.0]);
        assert_eq!(ds.distance(0, 7), Err(GeometryError::UnknownId(7)));
        assert!(matches!(
            ds.clustering_cost(&[9], &CostParams::with_p(2.0).unwrap()),
            Err(GeometryError::UnknownId(9))
        ));
    }

    #[test]
    fn explicit_matrix_validation_catches_asymmetry_and_triangle() {
        let pts = alloc::vec![
            Point::unit(0, alloc::vec![]),
            Point::unit(1, alloc::vec![]),
            Point::unit(2, alloc::vec![]),
        ];
        let asym = alloc::vec![
            alloc::vec![0.0, 1.0, 1.0],
            alloc::vec![2.0, 0.0, 1.0],
            alloc::vec![1.0, 1.0, 0.0],
        ];
        assert_eq!(
            Dataset::explicit(pts.clone(), &asym, true).unwrap_err(),
            GeometryError::MatrixAsymmetric(0, 1)
        );
        let no_triangle = alloc::vec![
            alloc::vec![0.0, 1.0, 5.0],
            alloc::vec![1.0, 0.0, 1.0],
            alloc::vec![5.0, 1.0, 0.0],
        ];
        assert_eq!(
            Dataset::explicit(pts.clone(), &no_triangle, true).unwrap_err(),
            GeometryError::TriangleViolation(0, 2, 1)
        );
        // Without the flag the O(n^3) check is skipped.
        assert!(Dataset::explicit(pts, &no_triangle, false).is_ok());
    }

    /// Independent brute force: per-point minimum over centers, summed.
    fn brute_cost(ds: &Dataset, centers: &[PointId], p: f64) -> f64 {
        ds.points()
            .iter()
            .map(|v| {
                let best = centers
                    .iter()
                    .map(|&c| ds.distance(v.id, c).unwrap())
                    .fold(f64::INFINITY, f64::min);
                v.weight * crate::math::pow(best, p)
            })
            .sum()
    }

    #[test]
    fn clustering_cost_matches_per_point_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<Point> = (0..5)
            .map(|i| Point::unit(i, alloc::vec![rng.random::<f64>(), rng.random::<f64>()]))
            .collect();
        let ds = Dataset::euclidean(pts).unwrap();
        let params = CostParams::with_p(1.0).unwrap();
        let cost = ds.clustering_cost(&[1, 3], &params).unwrap();
        assert!(approx_eq(cost, brute_cost(&ds, &[1, 3], 1.0), 1e-12));
    }

    #[test]
    fn cost_of_centers_equal_to_points_is_zero() {
        let ds = line(&[0.0, 1.0, 2.0]);
        let params = CostParams::with_p(2.0).unwrap();
        assert_eq!(ds.clustering_cost(&[0, 1, 2], &params).unwrap(), 0.0);
    }

    #[test]
    fn power_triangle_coefficients_at_p2_lambda7() {
        // (1+7)^1 = 8 and (8/7)^1 = 8/7.
        let params = CostParams::new(2.0, 7.0).unwrap();
        let got = power_triangle_bound(1.0, 1.0, &params);
        assert!(approx_eq(got, 8.0 + 8.0 / 7.0, 1e-15));
    }

    #[test]
    fn two_hop_bound_matches_independent_evaluation() {
        // Same formula, different association order.
        let (d1, d2, d3, p) = (0.3, 1.7, 0.9, 2.5);
        let got = two_hop_bound(d1, d2, d3, p);
        let want = crate::math::pow(3.0, p - 1.0) * crate::math::pow(d3, p)
            + (crate::math::pow(3.0, p - 1.0) * crate::math::pow(d1, p)
                + crate::math::pow(3.0, p - 1.0) * crate::math::pow(d2, p));
        assert!(approx_eq(got, want, 1e-12));
    }

    #[test]
    fn inequality_utilities_dominate_true_powers_on_random_triples() {
        // 10k random triples per inequality, both on triangle-consistent
        // distances and on raw positive reals (the bounds hold for any
        // nonnegative arguments).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = rng.random::<f64>() * 10.0;
            let b = rng.random::<f64>() * 10.0;
            let p = 1.0 + rng.random::<f64>() * 3.0;
            let lambda = 0.1 + rng.random::<f64>() * 10.0;
            let params = CostParams::new(p, lambda).unwrap();
            let direct = crate::math::pow(a + b, p);
            let bound = power_triangle_bound(a, b, &params);
            assert!(
                direct <= bound * (1.0 + 1e-9) + 1e-12,
                "power triangle failed: a={a} b={b} p={p} lambda={lambda}"
            );
        }
        for _ in 0..10_000 {
            let d1 = rng.random::<f64>() * 10.0;
            let d2 = rng.random::<f64>() * 10.0;
            let d3 = rng.random::<f64>() * 10.0;
            let p = 1.0 + rng.random::<f64>() * 3.0;
            let direct = crate::math::pow(d1 + d2 + d3, p);
            let bound = two_hop_bound(d1, d2, d3, p);
            assert!(
                direct <= bound * (1.0 + 1e-9) + 1e-12,
                "two hop failed: {d1} {d2} {d3} p={p}"
            );
        }
    }

    #[test]
    fn merge_duplicates_sums_weights_and_maps_ids() {
        let pts = alloc::vec![
            Point::new(10, 1.0, alloc::vec![0.0]),
            Point::new(11, 2.0, alloc::vec![0.0]),
            Point::new(12, 1.0, alloc::vec![1.0]),
            Point::new(13, 4.0, alloc::vec![0.0]),
        ];
        let ds = Dataset::euclidean(pts).unwrap();
        let (merged, map) = ds.merge_duplicates();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.points()[0].id, 10);
        assert_eq!(merged.points()[0].weight, 7.0);
        assert_eq!(map.get(&11), Some(&10));
        assert_eq!(map.get(&13), Some(&10));
        assert!(merged.min_pairwise_distance().unwrap() > 0.0);
    }

    proptest! {
        /// Growing the center set never increases the cost.
        #[test]
        fn cost_monotone_under_center_growth(
            coords in proptest::collection::vec(-50.0f64..50.0, 3..12),
            p in 1.0f64..4.0,
        ) {
            let ds = line(&coords);
            let params = CostParams::with_p(p).unwrap();
            let all: Vec<PointId> = (0..ds.len() as PointId).collect();
            for cut in 1..all.len() {
                let small = ds.clustering_cost(&all[..cut], &params).unwrap();
                let large = ds.clustering_cost(&all[..cut + 1], &params).unwrap();
                prop_assert!(large <= small * (1.0 + 1e-12) + 1e-12);
            }
        }

        /// Both inequality utilities are nonnegative and monotone in p-scale.
        #[test]
        fn bounds_nonnegative(a in 0.0f64..10.0, b in 0.0f64..10.0, c in 0.0f64..10.0, p in 1.0f64..4.0) {
            let params = CostParams::new(p, 7.0).unwrap();
            prop_assert!(power_triangle_bound(a, b, &params) >= 0.0);
            prop_assert!(two_hop_bound(a, b, c, p) >= 0.0);
        }
    }
}
