//! Finite-difference solver and diagnostics for radially symmetric
//! semilinear heat equations with the source `exp(u^p)`, either in the
//! interior of a ball (`u = 0` on the sphere) or as a boundary flux on an
//! insulated ball.
//!
//! [`grid`] holds the radial mesh and Laplacian, [`problem`] the nonlinearity,
//! initial data and their admissibility checks, [`solver`] the explicit time
//! stepper, and [`analysis`] everything computed from a finished run.
#![allow(clippy::excessive_precision, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod grid;
pub mod problem;
pub mod solver;

pub use grid::{BoundaryClosure, NodalField, RadialGrid};
pub use problem::{InitialFamily, Nonlinearity, ProblemKind, ProblemSpec, ValidationReport};
pub use solver::{integrate, RunResult, SolverConfig, StopReason};
