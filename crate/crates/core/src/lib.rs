//! Solvers for the time-fractional Allen–Cahn equation on rectangles.
//!
//! A Caputo derivative of order `α ∈ (0, 1)` (or the classical derivative)
//! is discretised by L1-type formulas on graded meshes, space by Fourier or
//! cosine pseudo-spectral collocation, and the nonlinear and memory terms by
//! a scalar auxiliary variable, which makes every step two linear solves and
//! keeps a discrete energy non-increasing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod history;
pub mod quadrature;
pub mod scheme;
pub mod snapshot;
pub mod spectral;
pub mod timegrid;

pub use error::{Error, Result};
