//! Conic convex optimization by first-order methods on smoothed duals.
//!
//! A model such as the Dantzig selector or a nuclear-norm LASSO is written in
//! conic form, a strongly convex proximity term `mu/2 ||x - x0||^2` is added,
//! and the resulting composite dual `phi = g + h` is minimized by one of six
//! accelerated first-order variants. Repeating the solve with an updated
//! center `x0` removes the effect of the smoothing.
//!
//! Modules, bottom-up:
//!
//! * [`linops`]: spaces, operators with call counters, matrix files
//! * [`prox`]: closed-form proximity operators and dual terms
//! * [`smoothing`]: conic models and their smoothed duals
//! * [`solvers`]: the first-order variants, backtracking and restart
//! * [`models`]: builders for the supported model families
//! * [`continuation`]: outer loops that update the center
//! * [`testgen`]: problem instances with certified exact solutions

pub mod continuation;
pub mod linops;
pub mod models;
pub mod prox;
pub mod smoothing;
pub mod solvers;
pub mod testgen;

pub use linops::{Element, LinOp, Shape};
pub use smoothing::{smooth, CompositeDual, ConicModel};
pub use solvers::{solve, solve_at_cached, SolverOptions, Variant};
