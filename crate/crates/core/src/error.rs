use thiserror::Error;

use crate::distributions::Family;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not positive definite after regularization")]
    NotPositiveDefinite,
    #[error("observation outside the support: {0}")]
    Domain(&'static str),
    #[error("data family {data:?} does not match model family {model:?}")]
    FamilyMismatch { data: Family, model: Family },
    #[error("invalid mixture: {0}")]
    InvalidModel(&'static str),
    #[error("dataset is empty")]
    EmptyData,
    #[error("data has zero range{}", coordinate.map(|c| alloc::format!(" in coordinate {c}")).unwrap_or_default())]
    ZeroRange { coordinate: Option<usize> },
    #[error("component {component} is degenerate (responsibility mass {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },
    #[error("log-likelihood is not finite at iteration {iteration}")]
    NonFiniteLikelihood { iteration: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
