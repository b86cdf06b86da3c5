use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::ValidateError;
use crate::fpe::{DensityGrid, GridSpec};
use crate::quadrature::integrate;

/// Closed-form (or quadrature-defined) reference densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Reference {
    Gaussian { mean: f64, variance: f64 },
    /// `X` with `ln X ~ Normal(mu, variance)`.
    Lognormal { mu: f64, variance: f64 },
    /// `x0 + S_t` with `E e^{ikS_t} = exp(−c t |k|^α)`.
    AlphaStableAdditive { alpha: f64, c: f64, t: f64, x0: f64 },
    /// `x0 · exp(S_t)` with `S_t` as above.
    AlphaStableMultiplicative { alpha: f64, c: f64, t: f64, x0: f64 },
    /// Gaussian initial law carried by the flow of `dx/dt = a + b x`.
    Transport { a: f64, b: f64, mean0: f64, variance0: f64, t: f64 },
}

/// `c` in `∫(1 − cos ky) ν(dy) = c|k|^α` for `ν(dy) = scale·|y|^{−1−α} dy`.
pub fn stable_exponent_constant(alpha: f64, scale: f64) -> f64 {
    let one_sided = if (alpha - 1.0).abs() < 1e-12 {
        PI / 2.0
    } else {
        gamma(1.0 - alpha) * (PI * alpha / 2.0).cos() / alpha
    };
    2.0 * scale * one_sided
}

/// Density of a symmetric stable variable with `E e^{ikS} = exp(−s|k|^α)`.
pub fn stable_density(alpha: f64, s: f64, x: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    // Cut the inversion integral where the integrand is negligible.
    let kmax = (40.0 / s).powf(1.0 / alpha);
    let f = |k: f64| (k * x).cos() * (-s * k.powf(alpha)).exp();
    // Panels of about one oscillation keep the adaptive rule honest.
    let panels = ((kmax * x.abs() / PI).ceil() as usize).clamp(8, 20_000);
    let h = kmax / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let a = i as f64 * h;
        total += integrate(f, a, a + h, 1e-15, 1e-12).unwrap_or_else(|e| e.estimate);
    }
    total / PI
}

impl Reference {
    pub fn pdf(&self, x: f64) -> f64 {
        let normal = |x: f64, m: f64, v: f64| (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        match *self {
            Reference::Gaussian { mean, variance } => normal(x, mean, variance),
            Reference::Lognormal { mu, variance } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal(x.ln(), mu, variance) / x
                }
            }
            Reference::AlphaStableAdditive { alpha, c, t, x0 } => stable_density(alpha, c * t, x - x0),
            Reference::AlphaStableMultiplicative { alpha, c, t, x0 } => {
                let r = x / x0;
                if r <= 0.0 {
                    0.0
                } else {
                    stable_density(alpha, c * t, r.ln()) / x.abs()
                }
            }
            Reference::Transport { a, b, mean0, variance0, t } => {
                let (m, v) = if b == 0.0 {
                    (mean0 + a * t, variance0)
                } else {
                    let g = (b * t).exp();
                    ((mean0 + a / b) * g - a / b, variance0 * g * g)
                };
                normal(x, m, v)
            }
        }
    }

    fn validate(&self) -> Result<(), ValidateError> {
        let bad = |m: &str| Err(ValidateError::UnsupportedReference(m.to_string()));
        match *self {
            Reference::Gaussian { variance, .. } | Reference::Lognormal { variance, .. } if !(variance > 0.0) => {
                bad("variance must be positive")
            }
            Reference::AlphaStableAdditive { alpha, c, t, .. } | Reference::AlphaStableMultiplicative { alpha, c, t, .. }
                if !(alpha > 0.0 && alpha <= 2.0 && c > 0.0 && t > 0.0) =>
            {
                bad("stable reference needs 0 < alpha <= 2, c > 0, t > 0")
            }
            Reference::AlphaStableMultiplicative { x0: 0.0, .. } => bad("x0 must be nonzero"),
            Reference::Transport { variance0, .. } if !(variance0 > 0.0) => bad("variance0 must be positive"),
            _ => Ok(()),
        }
    }
}

/// Cell averages of the reference density on `spec`. Mass outside the grid
/// is not redistributed.
pub fn analytic_reference(reference: &Reference, spec: GridSpec, time: f64) -> Result<DensityGrid, ValidateError> {
    reference.validate()?;
    Ok(DensityGrid::from_pdf(spec, time, |x| reference.pdf(x)))
}
