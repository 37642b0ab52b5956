//! Sensor placement search for monolithic actuator-lattice bodies.
//!
//! The pipeline follows the virtual-stiffening workflow:
//!
//! 1. [`geometry`] turns the parametric design rules into anchor nodes and a
//!    simplified solid outline.
//! 2. [`mesh`] voxelizes the outline into a labelled tetrahedral mesh and
//!    selects region-of-interest elements for a candidate inclusion.
//! 3. [`fem`] solves the quasi-static corotational problem under a follower
//!    cavity pressure program and records the monitored backbone nodes.
//! 4. [`candidates`] enumerates every contiguous anchor window.
//! 5. [`deviation`] compares a candidate backbone against the baseline in
//!    time and normalized arc length.
//! 6. [`search`] runs the exhaustive evaluation and ranks the candidates.
//! 7. [`report`] loads run configurations and writes all run artifacts.

// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod candidates;
pub mod deviation;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod parallel;
pub mod report;
pub mod search;

pub use error::{Error, Result};

/// Three-component vector in millimetres.
pub type Vec3 = nalgebra::Vector3<f64>;
