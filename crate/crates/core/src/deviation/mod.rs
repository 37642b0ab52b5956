//! Spatiotemporal backbone comparison: spline reparameterization, the
//! deviation matrix, its marginals and the scalar objectives.

mod metric;
mod spline;

pub use metric::{deviation_matrix, objective, DeviationReport};
pub use spline::{reparameterize, Centerline};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DeviationError {
    #[error("centerline needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate parameterization: points {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("time grids differ: {0}")]
    MismatchedGrid(String),
    #[error("`{name}` must be at least 2, got {value}")]
    SampleCount { name: &'static str, value: usize },
}
