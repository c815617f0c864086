//! Arithmetic abstraction for the simplex: IEEE doubles for speed, exact
//! big rationals for tolerance-free cross-checks.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// Field scalar used by the simplex tableau.
///
/// `tol()` is the magnitude below which a value is treated as zero when
/// picking pivots and pricing columns; the exact implementation returns 0 so
/// every comparison is exact.
pub trait Scalar: Signed + PartialOrd + Clone {
    /// Exact conversion from an LP coefficient. Callers guarantee finiteness
    /// ([`LinearProgram::validate`](crate::lp::LinearProgram::validate)).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn tol() -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tol() -> Self {
        1e-9
    }
}

impl Scalar for BigRational {
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite LP coefficient")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tol() -> Self {
        num_traits::Zero::zero()
    }
}
