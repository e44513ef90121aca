//! Proximity operators of composite penalties ω∘B via fixed-point iteration,
//! and proximal-gradient solvers built on them.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builders;
pub mod error;
pub mod experiments;
pub mod fixed_point;
pub mod linalg;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
