use std::fmt;
use std::sync::Arc;

use crate::levy::{Density1D, LevyTriplet};
use crate::transform::{SigmaFunction, TransformAtlas, TransformError};

pub type DriftFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Deterministic drift `f`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    Constant(f64),
    /// `intercept + slope · x`
    Linear { intercept: f64, slope: f64 },
    /// `Σ coeffs[j] x^j`
    Polynomial(Vec<f64>),
    Custom(DriftFn),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => f.write_str("Zero"),
            Drift::Constant(c) => write!(f, "Constant({c})"),
            Drift::Linear { intercept, slope } => write!(f, "Linear {{ intercept: {intercept}, slope: {slope} }}"),
            Drift::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Drift::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Drift {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Constant(c) => *c,
            Drift::Linear { intercept, slope } => intercept + slope * x,
            Drift::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            Drift::Custom(f) => f(x),
        }
    }
}

/// `dX = f(X) dt + σ(X) ⋄ dL` with `L` generated by `triplet`.
#[derive(Clone, Debug)]
pub struct SdeModel {
    pub drift: Drift,
    pub triplet: LevyTriplet,
    atlas: TransformAtlas,
}

impl SdeModel {
    pub fn new(drift: Drift, sigma: SigmaFunction, triplet: LevyTriplet) -> Result<Self, TransformError> {
        Ok(Self { drift, triplet, atlas: TransformAtlas::new(sigma)? })
    }

    pub fn with_atlas(drift: Drift, atlas: TransformAtlas, triplet: LevyTriplet) -> Self {
        Self { drift, triplet, atlas }
    }

    pub fn sigma(&self) -> &SigmaFunction {
        self.atlas.sigma()
    }

    pub fn atlas(&self) -> &TransformAtlas {
        &self.atlas
    }

    /// `f + bσ + (A/2)σσ'`, the drift of the continuous part in Itô form.
    #[inline]
    pub fn continuous_drift(&self, x: f64) -> f64 {
        let s = self.sigma();
        let sv = s.value(x);
        self.drift.eval(x) + self.triplet.b * sv + 0.5 * self.triplet.a * sv * s.derivative1(x)
    }
}

/// Marcus jump: the state after a jump `jump` of the driving noise from `x_left`.
pub fn marcus_jump_apply(model: &SdeModel, x_left: f64, jump: f64) -> Result<f64, TransformError> {
    model.atlas().h_tilde(x_left, jump)
}

/// Initial law of the simulated paths.
#[derive(Clone, Debug)]
pub enum InitialState {
    Point(f64),
    Density(Density1D),
}
