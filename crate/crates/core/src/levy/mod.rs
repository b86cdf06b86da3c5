//! Lévy triplets and measures: jump sampling, small-jump compensation and
//! quadrature of the jump measure.

mod density;
mod jumps;
mod measure;
mod rule;

pub use density::{CustomDensity, Density1D, PdfFn, SamplerFn};
pub use jumps::{sample_brownian_increment, sample_jumps, JumpEvent, JumpSampler, SignPool};
pub use measure::{small_jump_compensation, LevyMeasure, LevyTriplet};
pub use rule::{measure_quadrature, QuadratureRule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LevyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("jump density integrates to {0}, expected 1")]
    NotNormalized(f64),
    #[error("truncation level must be positive (and below 1 for compensation), got {0}")]
    InvalidTruncation(f64),
}
