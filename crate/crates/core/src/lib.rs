//! Fixed-volume discrepancy of Fibonacci lattice point sets.
//!
//! The library computes the r-smooth fixed-volume discrepancy of the
//! two-dimensional Fibonacci point sets, in two flavors:
//!
//! * the non-periodic sup form `D^r(F_n, v)` — worst cubature error over
//!   axis-parallel boxes of volume `v` carrying a smooth hat test function,
//! * the periodic `L_p` form `D̃^r_p(F_n, v)` — the `L_p` average over all
//!   torus shifts of the cubature error, then the sup over box shapes.
//!
//! Everything reduces to two exact ingredients: piecewise-polynomial
//! evaluation of the hat functions `h^r_u` (r-fold self-convolutions of an
//! indicator, i.e. scaled cardinal B-splines) in [`splines`], and the dual
//! lattice `L(n)` of the Fibonacci rank-1 lattice with its dyadic-shell
//! bookkeeping in [`lattice`]. The error functional and its norms live in
//! [`discrepancy`]; [`study`] reproduces the scaling laws (ratios against
//! `sqrt(log(b_n v))/b_n^r` and `log(b_n v)/b_n^r` normalizers) as
//! machine-readable tables.
//!
//! Numeric kernels are generic over the scalar type via [`Real`]; the
//! concrete alias [`Scalar`] (`f64`) is what the study pipelines and the
//! CLI use.
//!
//! ```
//! use fibdisc::discrepancy::{fixed_volume_discrepancy_periodic, PNorm};
//! use fibdisc::lattice::FibIndex;
//!
//! // L2 discrepancy of the two-point set over quarter-volume squares:
//! // the coefficient series sums to exactly 1/4.
//! let n = FibIndex::new(2).unwrap();
//! let res =
//!     fixed_volume_discrepancy_periodic::<f64>(n, 1, 0.25, PNorm::Finite(2.0), 1, 0).unwrap();
//! assert!((res.value - 0.25).abs() < 1e-12);
//! ```

pub mod discrepancy;
pub mod error;
pub mod lattice;
pub mod splines;
pub mod study;

mod scalar;
mod sum;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default scalar for the study pipelines and the CLI.
pub type Scalar = f64;
