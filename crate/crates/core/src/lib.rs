//! Moreau envelope augmented Lagrangian solvers.
//!
//! This crate solves linearly constrained problems
//!
//! ```text
//! minimize f(x)  subject to  Ax = b
//! ```
//!
//! where `f` is weakly convex and possibly nonsmooth, either as a single
//! prox-friendly function or as a composite `f = h + g` with `h` smooth.
//!
//! The main algorithms update a primal anchor `z` by a gradient step on the
//! Moreau envelope of the augmented Lagrangian and the multiplier `λ` by dual
//! ascent:
//!
//! - [`Algorithm::Meal`]: exact envelope step,
//! - [`Algorithm::Imeal`]: subproblem solved to a summable residual schedule,
//! - [`Algorithm::Limeal`]: smooth part linearized inside the subproblem,
//!
//! together with the classic ALM and Prox-iALM baselines, the stationarity and
//! Lyapunov quantities used to monitor them, brute-force oracles used to
//! certify every closed form, and the two reference experiments.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod envelope;
pub mod error;
pub mod experiments;
mod inner;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod penalty;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod solvers;

pub use envelope::{EnvelopeContext, IterateState, PenaltyMode, PenaltyPlan, SubproblemSolver};
pub use error::{Error, Result};
pub use problem::{ImplicitClass, LinearConstraint, Problem, QuadraticForm, SmoothFunction};
pub use prox::{ProxFunction, ProxKind};
pub use solvers::{Algorithm, SolverConfig, TerminalStatus, Trace};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
