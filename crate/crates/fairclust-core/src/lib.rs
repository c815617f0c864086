//! Individually fair k-clustering with ℓp-norm cost.
//!
//! A k-clustering of a point set is *α-fair* when every point has a chosen
//! center within `α` times its *fair radius* — the distance within which the
//! point already has `⌈n/k⌉` neighbours (itself included). This crate computes
//! bicriteria solutions: the returned centers are `3α`-fair and their ℓp cost
//! is within a constant factor (`16^p + ε` for `p > 1`, `22 + ε` for `p = 1`,
//! `3 + ε` for the k-center objective) of the optimal α-fair cost.
//!
//! The solver works by reduction: critical regions of the input induce a
//! facility-location instance under a partition-matroid constraint
//! ([`reductions`]), which is solved by LP rounding ([`facility_location`]) on
//! top of a bounded-variable simplex ([`lp`]). Every stage of the rounding
//! records the inequality that justifies it; the resulting
//! [`CertificateChain`](facility_location::CertificateChain) is re-verified
//! numerically on every solve. Small instances can instead be solved by the
//! exhaustive [`oracle`] routines, which exist purely to cross-check the
//! polynomial path.
//!
//! The crate is `no_std`-compatible (allocation required): disable the
//! default `std` feature to build for targets without the standard library.
//! All float math is routed through `libm`, so results are bit-identical
//! across platforms.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod fairness;
pub mod facility_location;
pub mod geometry;
pub mod lp;
pub mod math;
pub mod matroid;
pub mod oracle;
pub mod reductions;
