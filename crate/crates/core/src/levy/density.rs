use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use super::LevyError;
use crate::quadrature::integrate;
use crate::rng::RngState;

pub type PdfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SamplerFn = Arc<dyn Fn(&mut RngState) -> f64 + Send + Sync>;

/// A probability density on the real line, used for compound-Poisson jump
/// sizes and for random initial conditions.
#[derive(Clone)]
pub enum Density1D {
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Laplace { loc: f64, scale: f64 },
    Custom(CustomDensity),
}

/// A user-supplied density. Without a sampler, draws use rejection against a
/// uniform envelope, so the support must be bounded.
#[derive(Clone)]
pub struct CustomDensity {
    pdf: PdfFn,
    sampler: Option<SamplerFn>,
    support: (f64, f64),
    envelope: f64,
}

impl fmt::Debug for Density1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density1D::Normal { mean, std } => write!(f, "Normal({mean}, {std})"),
            Density1D::Uniform { low, high } => write!(f, "Uniform({low}, {high})"),
            Density1D::Laplace { loc, scale } => write!(f, "Laplace({loc}, {scale})"),
            Density1D::Custom(c) => write!(f, "Custom(support={:?})", c.support),
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl Density1D {
    pub fn normal(mean: f64, std: f64) -> Result<Self, LevyError> {
        if !(std > 0.0) || !mean.is_finite() || !std.is_finite() {
            return Err(LevyError::InvalidParameter(format!("normal density needs std > 0, got {std}")));
        }
        Ok(Density1D::Normal { mean, std })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, LevyError> {
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(LevyError::InvalidParameter(format!("uniform density needs low < high, got [{low}, {high}]")));
        }
        Ok(Density1D::Uniform { low, high })
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self, LevyError> {
        if !(scale > 0.0) || !loc.is_finite() {
            return Err(LevyError::InvalidParameter(format!("laplace density needs scale > 0, got {scale}")));
        }
        Ok(Density1D::Laplace { loc, scale })
    }

    /// Wraps a user density. The density must integrate to one over `support`
    /// within 1e-8.
    pub fn custom(pdf: PdfFn, support: (f64, f64), sampler: Option<SamplerFn>) -> Result<Self, LevyError> {
        let (lo, hi) = support;
        if !(lo < hi) {
            return Err(LevyError::InvalidParameter("custom density support is empty".into()));
        }
        if sampler.is_none() && !(lo.is_finite() && hi.is_finite()) {
            return Err(LevyError::InvalidParameter(
                "custom density without a sampler needs bounded support".into(),
            ));
        }
        let mass = mass_of(&*pdf, lo, hi)?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(LevyError::NotNormalized(mass));
        }
        let envelope = if lo.is_finite() && hi.is_finite() {
            let n = 4096;
            let mut m: f64 = 0.0;
            for i in 0..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                let v = pdf(x);
                if v < 0.0 {
                    return Err(LevyError::InvalidParameter(format!("custom density is negative at {x}")));
                }
                m = m.max(v);
            }
            1.1 * m
        } else {
            f64::INFINITY
        };
        Ok(Density1D::Custom(CustomDensity { pdf, sampler, support, envelope }))
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1D::Normal { .. } | Density1D::Laplace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Density1D::Uniform { low, high } => (*low, *high),
            Density1D::Custom(c) => c.support,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density1D::Normal { mean, std } => {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
            Density1D::Uniform { low, high } => {
                if x >= *low && x <= *high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Density1D::Laplace { loc, scale } => (-(x - loc).abs() / scale).exp() / (2.0 * scale),
            Density1D::Custom(c) => {
                if x < c.support.0 || x > c.support.1 {
                    0.0
                } else {
                    (c.pdf)(x).max(0.0)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density1D::Normal { mean, std } => std_normal_cdf((x - mean) / std),
            Density1D::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Density1D::Laplace { loc, scale } => {
                if x < *loc {
                    0.5 * ((x - loc) / scale).exp()
                } else {
                    1.0 - 0.5 * (-(x - loc) / scale).exp()
                }
            }
            Density1D::Custom(c) => {
                let hi = x.min(c.support.1);
                if hi <= c.support.0 {
                    return 0.0;
                }
                mass_of(&*c.pdf, c.support.0, hi).unwrap_or(f64::NAN).clamp(0.0, 1.0)
            }
        }
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            // Tail-accurate difference for the normal.
            Density1D::Normal { mean, std } => {
                let (za, zb) = ((a - mean) / std, (b - mean) / std);
                if za > 0.0 {
                    std_normal_cdf(-za) - std_normal_cdf(-zb)
                } else {
                    std_normal_cdf(zb) - std_normal_cdf(za)
                }
            }
            _ => (self.cdf(b) - self.cdf(a)).max(0.0),
        }
    }

    /// `∫_a^b y^k μ(dy)` by adaptive quadrature over the support.
    pub fn moment(&self, k: i32, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return 0.0;
        }
        if k == 0 {
            return self.mass(a, b);
        }
        let (a, b) = match self {
            Density1D::Normal { mean, std } => (a.max(mean - 40.0 * std), b.min(mean + 40.0 * std)),
            Density1D::Laplace { loc, scale } => (a.max(loc - 80.0 * scale), b.min(loc + 80.0 * scale)),
            _ => (a, b),
        };
        if b <= a {
            return 0.0;
        }
        // Split at the mode for the peaked built-ins.
        let split = match self {
            Density1D::Laplace { loc, .. } | Density1D::Normal { mean: loc, .. } if *loc > a && *loc < b => Some(*loc),
            _ => None,
        };
        let f = |y: f64| y.powi(k) * self.pdf(y);
        let piece = |lo: f64, hi: f64| integrate(f, lo, hi, 1e-15, 1e-12).unwrap_or_else(|e| e.estimate);
        match split {
            Some(m) => piece(a, m) + piece(m, b),
            None => piece(a, b),
        }
    }

    /// Whether `pdf(-y) == pdf(y)` holds by construction.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Density1D::Normal { mean, .. } => *mean == 0.0,
            Density1D::Uniform { low, high } => *low == -*high,
            Density1D::Laplace { loc, .. } => *loc == 0.0,
            Density1D::Custom(_) => false,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Density1D::Normal { mean, .. } => *mean,
            Density1D::Uniform { low, high } => 0.5 * (low + high),
            Density1D::Laplace { loc, .. } => *loc,
            Density1D::Custom(c) => self.moment(1, c.support.0, c.support.1),
        }
    }

    pub fn sample(&self, rng: &mut RngState) -> f64 {
        match self {
            Density1D::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            Density1D::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Density1D::Laplace { loc, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
            Density1D::Custom(c) => match &c.sampler {
                Some(s) => s(rng),
                None => loop {
                    let x = c.support.0 + (c.support.1 - c.support.0) * rng.random::<f64>();
                    if rng.random::<f64>() * c.envelope <= (c.pdf)(x) {
                        break x;
                    }
                },
            },
        }
    }
}

fn mass_of(pdf: &(dyn Fn(f64) -> f64 + Send + Sync), lo: f64, hi: f64) -> Result<f64, LevyError> {
    let integrand = |x: f64| pdf(x);
    let value = if lo.is_finite() && hi.is_finite() {
        integrate(integrand, lo, hi, 1e-13, 1e-12)
    } else {
        // Map an infinite range onto (-1, 1) with x = t / (1 - t^2).
        let g = |t: f64| {
            let d = 1.0 - t * t;
            let x = t / d;
            if x < lo || x > hi {
                0.0
            } else {
                pdf(x) * (1.0 + t * t) / (d * d)
            }
        };
        let a = if lo.is_finite() { to_unit(lo) } else { -1.0 };
        let b = if hi.is_finite() { to_unit(hi) } else { 1.0 };
        integrate(g, a, b, 1e-13, 1e-12)
    };
    value.map_err(|e| LevyError::InvalidParameter(format!("density integral did not converge (err {})", e.error)))
}

fn to_unit(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
    }
}
