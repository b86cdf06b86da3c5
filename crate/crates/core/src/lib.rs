//! Simulation and Fokker-Planck solvers for one-dimensional Marcus SDEs
//! driven by Lévy noise.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod exec;
pub mod levy;
pub mod quadrature;
pub mod rng;
pub mod transform;
pub mod fpe;
pub mod sde;
pub mod validate;
pub mod cli;
