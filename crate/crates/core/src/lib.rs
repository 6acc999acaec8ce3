// `!(x <= tol)` is how tolerance checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equivalence;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod linalg;
pub mod metric;
pub mod scenario;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
