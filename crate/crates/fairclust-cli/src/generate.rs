//! Deterministic synthetic datasets: Gaussian blobs of increasing spread,
//! one blob per cluster, emitted in the point-table CSV format.

use std::fmt::Write as _;

use fairclust_core::geometry::{Point, PointId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::CliError;

/// Cluster centers sit this far apart along the first axis, so the default
/// spreads keep blobs well separated (and fair radii per-blob).
const CLUSTER_GAP: f64 = 8.0;

pub struct GenSpec {
    pub n: usize,
    pub dims: usize,
    pub clusters: usize,
    pub spread: f64,
    pub seed: u64,
}

/// Point `i` joins blob `i mod clusters`; blob `j` is centered at
/// `(GAP·j, 0, …)` with standard deviation `spread·(j+1)`, so later blobs
/// are sparser than earlier ones. Fully determined by the seed.
pub fn generate_synthetic(spec: &GenSpec) -> Result<Vec<Point>, CliError> {
    if spec.n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    if spec.dims == 0 {
        return Err(CliError::Input("--dims must be at least 1".into()));
    }
    if spec.clusters == 0 {
        return Err(CliError::Input("--clusters must be at least 1".into()));
    }
    if !spec.spread.is_finite() || spec.spread < 0.0 {
        return Err(CliError::Input("--spread must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let blob = i % spec.clusters;
        let sigma = spec.spread * (blob + 1) as f64;
        let mut coords = Vec::with_capacity(spec.dims);
        for dim in 0..spec.dims {
            let mean = if dim == 0 { CLUSTER_GAP * blob as f64 } else { 0.0 };
            let normal = Normal::new(mean, sigma)
                .map_err(|e| CliError::Input(format!("bad generator parameters: {e}")))?;
            coords.push(normal.sample(&mut rng));
        }
        points.push(Point::new(i as PointId, 1.0, coords));
    }
    Ok(points)
}

/// `id,w,x1,...,xd` with shortest-roundtrip float formatting.
pub fn points_to_csv(points: &[Point]) -> String {
    let dims = points.first().map_or(0, |p| p.coords.len());
    let mut out = String::from("id,w");
    for d in 1..=dims {
        let _ = write!(out, ",x{d}");
    }
    out.push('\n');
    for p in points {
        let _ = write!(out, "{},{}", p.id, p.weight);
        for c in &p.coords {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}
