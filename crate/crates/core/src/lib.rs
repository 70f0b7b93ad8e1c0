//! Inertial proximal algorithm for non-convex optimization (iPiano).
//!
//! Minimizes `h = f + g` with `f` smooth and `g` convex through the
//! inertial forward-backward iteration, records per-iteration traces and
//! checks them against the convergence theory at runtime.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod image;
pub mod linalg;
pub mod objective;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use image::Image;
pub use objective::{Composite, ConvexTerm, Objective, SmoothTerm};
pub use solver::{solve, Solution, Solver, SolverState, StepRule, StopCriterion, StopReason};
