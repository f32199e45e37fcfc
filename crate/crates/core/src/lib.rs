//! Numerical laboratory for the outflow problem of the one-dimensional full
//! compressible Navier–Stokes equations on the half line.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod gas;
pub mod io;
pub mod lagrangian;
pub mod stationary;

pub use error::{Error, Result};
