//! Optimal control of systems governed by Volterra integral equations.
//!
//! A continuous problem ([`problem::VolterraProblem`]) is discretized by the
//! Euler scheme ([`discretize`]), its controls are quantized on a lattice, and
//! the discrete problem is solved exactly by a dynamic-programming recursion
//! whose value function is indexed by the control history ([`dp`]). The
//! [`oracle`] module provides independent references: exhaustive enumeration,
//! continuous-time solutions and convergence studies. [`costmodel`] predicts
//! and measures the operation counts of the recursion.

pub mod costmodel;
pub mod discretize;
pub mod dp;
mod error;
pub mod io;
pub mod oracle;
pub mod problem;

pub use error::{Error, Result};
