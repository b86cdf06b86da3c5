//! Finite-volume solver for the nonlocal Fokker-Planck equation of a Marcus
//! SDE.
//!
//! The equation is advanced in flux form,
//!
//! `∂p/∂t = −∂x[(f + (b − m)σ) p] + (A_eff/2) ∂x(σ ∂x(σ p)) + J p`,
//!
//! where jumps below `δ` are folded into `A_eff` and the jump part `J` is
//! applied as a remap of the cumulative mass through the pullback points
//! `H̃(x_e, −y_k)` of the cell edges. Because `H̃` never crosses a zero of σ,
//! edges placed on those zeros carry no jump flux.

pub mod export;
mod grid;
mod operator;
mod pointwise;
mod step;

pub use export::{write_snapshot_csv, write_solution};
pub use grid::{DensityGrid, GridSpec};
pub use operator::{assemble_operator, stability_limit, FpeOperatorData, KernelEntry, QuadParams};
pub use pointwise::{pointwise_generator, pointwise_nonlocal};
pub use step::{apply_jump, solve, step, FpeSolution, MassLedger, RunReport, StepControl, Workspace};

use crate::transform::TransformError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FpeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("zero of sigma at {zero} is not on a cell edge (nearest {nearest_edge})")]
    ZeroNotAligned { zero: f64, nearest_edge: f64 },
    #[error("grid too coarse: smallest jump moves x={x} by {displacement:.3e} > 10·dx ({dx:.3e})")]
    GridTooCoarse { x: f64, displacement: f64, dx: f64 },
    #[error("instability at t={time}: sup norm grew by {growth:.3}")]
    Instability { time: f64, growth: f64 },
    #[error(transparent)]
    Transform(#[from] TransformError),
}
