//! Exact rarefaction solutions, a finite-volume solver and relative-energy
//! certificates for the two-dimensional barotropic Euler equations with
//! Riemann initial data.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod entropy;
pub mod eos;
pub mod fvm;
pub mod io;
pub mod numerics;
pub mod riemann;
