//! Bound states and scattering for two P-pseudo-Hermitian complex potentials
//! in one dimension, checked against an independent transfer-matrix solver.
//!
//! Units are reduced: ħ²/(2m) = 1.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod check;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod potential;
pub mod scattering;
pub mod sweep;

pub use error::{Error, Result};
pub use potential::{Family, PiecewiseSystem, PotentialSpec};
