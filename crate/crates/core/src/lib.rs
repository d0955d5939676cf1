//! Symmetry-reduced Nehari solver for the critical competitive system on the sphere.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod scalar;
pub mod separation;
pub mod solver;

pub use error::{Error, Result};
