//! Path simulation of Marcus SDEs with a jump-adapted Euler scheme.

mod empirical;
pub mod export;
mod model;
mod simulate;

pub use empirical::{empirical_density, Smoothing};
pub use export::{read_binary, write_binary, write_csv};
pub use model::{marcus_jump_apply, Drift, DriftFn, InitialState, SdeModel};
pub use simulate::{simulate, FlagReason, FlaggedPath, PathEnsemble, SimulationPlan, DEFAULT_BLOWUP_GUARD};

use crate::levy::LevyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdeError {
    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
    #[error("ensemble has no surviving paths")]
    EmptyEnsemble,
    #[error(transparent)]
    Levy(#[from] LevyError),
}
