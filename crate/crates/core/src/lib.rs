//! Penalized variational solver for radial Choquard equations
//! `-Δu + V(x) u = (|x|^{-μ} * F(u)) f(u)` in three dimensions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod nonlinearity;
pub mod potential;
pub mod quad;
pub mod penalty;
pub mod riesz;
pub mod solver;
pub mod verify;

pub use error::{ChoquardError, Result};
