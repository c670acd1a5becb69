//! Space-time finite elements for parabolic convection–diffusion problems.
//!
//! A time-dependent problem in `d` space dimensions is discretized as a
//! stationary convection–diffusion problem on a `(d+1)`-dimensional simplicial
//! mesh of the space-time box. Three schemes are provided: streamline
//! diffusion (`sd`), the lowest-order exponentially fitted scheme with the
//! Bernoulli kernel ([`eafe_low`]), and its general-order construction based
//! on Nédélec spaces (`eafe_high`).

// Index loops mirror the dense local algebra; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod eafe_high;
pub mod eafe_low;
pub mod error;
pub mod export;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod sd;
pub mod study;

pub use error::{Error, Result};
