//! Transforms that linearise the Marcus jump flow: `H_i = ∫ dt/σ` on each
//! interval between zeros of σ, the glued jump map `H̃`, its spatial
//! derivative, and an ODE reference for the flow.

mod atlas;
mod ode;
mod phi;
mod sigma;

pub use atlas::{AtlasOptions, TransformAtlas, DEFAULT_SERIES_ORDER};
pub use ode::{marcus_map_ode, marcus_map_ode_with, OdeTolerance};
pub use phi::phi_coefficients;
pub use sigma::{SigmaCustom, SigmaFunction, SigmaKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("point {0} is a zero of sigma")]
    ZeroOfSigma(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("series for dH/dx diverges at y={y} (tail estimate {tail:.3e})")]
    SeriesDivergence { y: f64, tail: f64 },
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("ODE step size underflow at z={z} (h={h:.3e})")]
    StepUnderflow { z: f64, h: f64 },
    #[error("invalid sigma: {0}")]
    InvalidSigma(String),
    #[error("interval index {0} out of range")]
    InvalidInterval(usize),
}
