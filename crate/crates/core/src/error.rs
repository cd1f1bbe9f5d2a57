use thiserror::Error;

use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("matrix is singular (pivot {0:e})")]
    Singular(f64),
    #[error("invalid ambient model: {0}")]
    InvalidModel(String),
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("map is not an immersion at {u:?} (Gram ratio {ratio:e})")]
    NotImmersion { u: Vec<f64>, ratio: f64 },
    #[error("tangent space is not J-invariant at {u:?} (residual {residual:e})")]
    NotComplex { u: Vec<f64>, residual: f64 },
    #[error("normal frame construction found {found} of {needed} vectors")]
    DegenerateFrame { found: usize, needed: usize },
    #[error("{quantity}: computation paths disagree by {residual:e}")]
    PathDisagreement { quantity: &'static str, residual: f64 },
}
