//! Numerical laboratory for the singular Hamilton-Jacobi equation
//!
//! ```text
//! ∂ₜF + ½(∂ₓF − m)(∂ₓF − m − 1) + F/x − m = 0,   0 ≤ F ≤ m·x,
//! ```
//!
//! obtained by applying the Bernstein transform to the coagulation-fragmentation
//! equation with multiplicative coagulation and constant fragmentation kernels.
//!
//! The crate is organised bottom-up:
//!
//! * [`stationary`]: closed-form Cardano profiles `x ↦ F̄(cx)/c` and their checks.
//! * [`bernstein`]: Bernstein transforms of size measures and admissibility reports.
//! * [`initial_data`]: a catalog of initial data across the growth regimes,
//!   including the oscillating nonconvergence datum.
//! * [`fd_solver`]: monotone Godunov finite-difference solver.
//! * [`sl_solver`]: semi-Lagrangian solver built on the optimal-control value function.
//! * [`characteristics`]: RK4 integration of the Hamiltonian system and
//!   dependence/influence intervals.
//! * [`longtime`]: long-horizon convergence, envelope and oscillation studies.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod characteristics;
pub mod error;
pub mod fd_solver;
pub mod grid;
pub mod initial_data;
pub mod longtime;
pub mod quadrature;
pub mod roots;
pub mod sl_solver;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
