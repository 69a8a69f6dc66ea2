//! Finite-element / linear-implicit-Euler discretization of the linear-quadratic
//! control problem for the stochastic heat equation with Neumann boundary
//! noise, with feedback from a low-rank differential Riccati solver and
//! drivers for convergence-order experiments.

pub mod control;
pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod riccati;
pub mod stepper;

pub use error::{Error, Result};
