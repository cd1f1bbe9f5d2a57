//! Numerical verification of the extrinsic geometry of complex submanifolds in complex space forms.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod cli;
pub mod error;
pub mod identities;
pub mod jets;
pub mod linalg;
pub mod recurrence;
pub mod report;
pub mod sampling;
pub mod submanifold;

pub use error::GeomError;
