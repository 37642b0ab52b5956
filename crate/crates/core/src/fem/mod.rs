//! Quasi-static corotational tetrahedral elasticity under follower cavity
//! pressure.

mod element;
mod material;
mod program;
mod solver;
mod trajectory;

pub use element::{lame, polar_rotation, TetElement};
pub use material::{assemble_material, homogenized_lattice_modulus, MaterialConfig, MaterialField};
pub use program::{PressureBounds, PressureProgram};
pub use solver::{
    solve_quasistatic, Kinematics, Layout, LoadCase, SolveStats, SolverSettings, System,
};
pub use trajectory::{bending_angle, TrajectorySet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("material: {0}")]
    Material(String),
    #[error("pressure program: {0}")]
    Program(String),
    #[error("step count must be at least 2, got {0}")]
    StepCount(usize),
    #[error("no convergence at step {step} (pressure {pressure} kPa): residual {residual:e}")]
    NonConvergence {
        step: usize,
        pressure: f64,
        residual: f64,
    },
    #[error("assembly: stiffness is singular ({0}); check the displacement constraints")]
    Singular(String),
    #[error("trajectory: {0}")]
    Trajectory(String),
}
