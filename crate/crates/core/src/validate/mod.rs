//! Density comparisons and closed-form reference densities.

mod compare;
mod reference;

pub use compare::{compare, compare_with, mc_band, Accounting, ComparisonReport, Verdict, DEFAULT_L1_FLOOR};
pub use reference::{analytic_reference, stable_density, stable_exponent_constant, Reference};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidateError {
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("unsupported reference: {0}")]
    UnsupportedReference(String),
}
