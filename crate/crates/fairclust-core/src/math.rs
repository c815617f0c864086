//! Float helpers shared by every module.
//!
//! All powers and roots go through `libm` rather than `std` intrinsics so the
//! crate builds without `std` and produces bit-identical values on every
//! platform. Solver code must use these helpers instead of `f64::powf` /
//! `f64::sqrt`; cross-checks between independent code paths rely on both
//! sides computing `d^p` the same way.

/// `x^e` for nonnegative bases. `pow(0, 0) = 1` per IEEE 754.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

/// Square root.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `a ≤ b` up to relative slack: `a ≤ b + rel·|b| + 1e-12`.
///
/// The absolute floor keeps exact-zero chains (for instance a zero-cost
/// solution compared against a zero LP optimum) from failing on rounding
/// noise alone.
#[inline]
pub fn approx_le(a: f64, b: f64, rel: f64) -> bool {
    a <= b + rel * b.abs() + 1e-12
}

/// `|a − b|` within relative tolerance `rel` (floored at 1e-12 absolute).
#[inline]
pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    approx_le(a, b, rel) && approx_le(b, a, rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_matches_integer_powers() {
        assert_eq!(pow(3.0, 1.0), 3.0);
        assert!(approx_eq(pow(3.0, 2.0), 9.0, 1e-15));
        assert_eq!(pow(0.0, 0.0), 1.0);
        assert_eq!(pow(0.0, 2.0), 0.0);
    }

    #[test]
    fn approx_le_tolerates_rounding_noise_only() {
        assert!(approx_le(1.0 + 1e-9, 1.0, 1e-6));
        assert!(!approx_le(1.01, 1.0, 1e-6));
        assert!(approx_le(0.0, 0.0, 1e-6));
    }
}
