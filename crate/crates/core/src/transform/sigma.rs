use std::fmt;
use std::sync::Arc;

use super::TransformError;

/// User-supplied noise coefficient.
pub trait SigmaCustom: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative1(&self, x: f64) -> f64;
    fn derivative2(&self, x: f64) -> f64;
    /// Taylor coefficients `σ^{(m)}(x)/m!` for `m = 0..=order`, if known.
    fn taylor(&self, _x: f64, _order: usize) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Clone)]
pub enum SigmaKind {
    Constant(f64),
    /// `slope · (x − root)`
    Linear { slope: f64, root: f64 },
    /// `amplitude · sin(frequency · x)`
    Sine { amplitude: f64, frequency: f64 },
    /// `Σ coeffs[j] x^j`
    Polynomial(Vec<f64>),
    Custom(Arc<dyn SigmaCustom>),
}

impl fmt::Debug for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaKind::Constant(c) => write!(f, "Constant({c})"),
            SigmaKind::Linear { slope, root } => write!(f, "Linear {{ slope: {slope}, root: {root} }}"),
            SigmaKind::Sine { amplitude, frequency } => {
                write!(f, "Sine {{ amplitude: {amplitude}, frequency: {frequency} }}")
            }
            SigmaKind::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            SigmaKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A noise coefficient together with its (finite) zero set and a Lipschitz
/// bound.
#[derive(Clone, Debug)]
pub struct SigmaFunction {
    kind: SigmaKind,
    zeros: Vec<f64>,
    lipschitz: f64,
}

impl SigmaFunction {
    pub fn constant(c: f64) -> Result<Self, TransformError> {
        finite("constant", c)?;
        Ok(Self { kind: SigmaKind::Constant(c), zeros: Vec::new(), lipschitz: 0.0 })
    }

    pub fn linear(slope: f64, root: f64) -> Result<Self, TransformError> {
        finite("slope", slope)?;
        finite("root", root)?;
        if slope == 0.0 {
            return Self::constant(0.0);
        }
        Ok(Self { kind: SigmaKind::Linear { slope, root }, zeros: vec![root], lipschitz: slope.abs() })
    }

    /// `amplitude · sin(frequency · x)`. Only zeros inside `window` (widened by
    /// one period) are kept; the atlas is meaningful inside that window.
    pub fn sine(amplitude: f64, frequency: f64, window: (f64, f64)) -> Result<Self, TransformError> {
        finite("amplitude", amplitude)?;
        finite("frequency", frequency)?;
        check_window(window)?;
        if amplitude == 0.0 || frequency == 0.0 {
            return Self::constant(0.0);
        }
        let spacing = std::f64::consts::PI / frequency.abs();
        let lo = ((window.0 - 2.0 * spacing) / spacing).ceil() as i64;
        let hi = ((window.1 + 2.0 * spacing) / spacing).floor() as i64;
        if hi - lo > 1_000_000 {
            return Err(TransformError::InvalidSigma("sine window holds too many zeros".into()));
        }
        let zeros = (lo..=hi).map(|k| k as f64 * spacing).collect();
        Ok(Self {
            kind: SigmaKind::Sine { amplitude, frequency },
            zeros,
            lipschitz: (amplitude * frequency).abs(),
        })
    }

    /// Polynomial with caller-supplied real zeros. The Lipschitz bound is the
    /// largest `|σ'|` found on `window`.
    pub fn polynomial(coeffs: Vec<f64>, zeros: Vec<f64>, window: (f64, f64)) -> Result<Self, TransformError> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(TransformError::InvalidSigma("polynomial needs finite coefficients".into()));
        }
        check_window(window)?;
        let kind = SigmaKind::Polynomial(coeffs);
        let lipschitz = sampled_lipschitz(&kind, window);
        Self::with_zeros(kind, zeros, lipschitz)
    }

    pub fn custom(
        sigma: Arc<dyn SigmaCustom>,
        zeros: Vec<f64>,
        lipschitz: f64,
    ) -> Result<Self, TransformError> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(TransformError::InvalidSigma(format!("lipschitz bound must be finite and >= 0, got {lipschitz}")));
        }
        Self::with_zeros(SigmaKind::Custom(sigma), zeros, lipschitz)
    }

    fn with_zeros(kind: SigmaKind, mut zeros: Vec<f64>, lipschitz: f64) -> Result<Self, TransformError> {
        if zeros.iter().any(|z| !z.is_finite()) {
            return Err(TransformError::InvalidSigma("zeros must be finite".into()));
        }
        zeros.sort_by(f64::total_cmp);
        zeros.dedup();
        let raw = Self { kind, zeros: Vec::new(), lipschitz };
        for &z in &zeros {
            let v = raw.raw_value(z);
            let scale = 1.0 + raw.raw_d1(z).abs() * (1.0 + z.abs());
            if v.abs() > 1e-10 * scale {
                return Err(TransformError::InvalidSigma(format!("listed zero {z} has sigma = {v}")));
            }
        }
        Ok(Self { zeros, ..raw })
    }

    pub fn kind(&self) -> &SigmaKind {
        &self.kind
    }

    /// Sorted zero set (finite window for periodic kinds).
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(self.kind, SigmaKind::Constant(c) if c == 0.0)
    }

    /// `σ(x)`; exactly zero at listed zeros.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            SigmaKind::Constant(c) => c,
            SigmaKind::Linear { slope, root } => slope * (x - root),
            _ => {
                if self.is_zero(x) {
                    0.0
                } else {
                    self.raw_value(x)
                }
            }
        }
    }

    #[inline]
    pub fn derivative1(&self, x: f64) -> f64 {
        self.raw_d1(x)
    }

    #[inline]
    pub fn derivative2(&self, x: f64) -> f64 {
        match &self.kind {
            SigmaKind::Constant(_) | SigmaKind::Linear { .. } => 0.0,
            SigmaKind::Sine { amplitude, frequency } => -amplitude * frequency * frequency * (frequency * x).sin(),
            SigmaKind::Polynomial(c) => {
                let d: Vec<f64> = (2..c.len()).map(|j| (j * (j - 1)) as f64 * c[j]).collect();
                horner(&d, x)
            }
            SigmaKind::Custom(s) => s.derivative2(x),
        }
    }

    /// `σ(z + d)` for a listed zero `z`, accurate relative to `d` when `d` is
    /// small (plain evaluation loses the low bits of `z + d`).
    pub fn value_offset(&self, z: f64, d: f64) -> f64 {
        match &self.kind {
            SigmaKind::Constant(c) => *c,
            SigmaKind::Linear { slope, root } => slope * ((z - root) + d),
            SigmaKind::Sine { amplitude, frequency } => {
                let phase = frequency * z;
                // sin(phase) vanishes at a zero up to rounding of `phase`.
                let cos_z = (phase / std::f64::consts::PI).round().rem_euclid(2.0);
                let sign = if cos_z == 0.0 { 1.0 } else { -1.0 };
                amplitude * sign * (frequency * d).sin()
            }
            SigmaKind::Polynomial(c) => {
                let jet = self.taylor(z, c.len().saturating_sub(1)).unwrap_or_default();
                horner(&jet, d)
            }
            SigmaKind::Custom(s) => s.value(z + d),
        }
    }

    pub fn is_zero(&self, x: f64) -> bool {
        self.zeros.binary_search_by(|z| z.total_cmp(&x)).is_ok()
    }

    /// Taylor coefficients `σ^{(m)}(x)/m!`, `m = 0..=order`, when available
    /// in closed form.
    pub fn taylor(&self, x: f64, order: usize) -> Option<Vec<f64>> {
        let mut out = vec![0.0; order + 1];
        match &self.kind {
            SigmaKind::Constant(c) => out[0] = *c,
            SigmaKind::Linear { slope, root } => {
                out[0] = slope * (x - root);
                if order >= 1 {
                    out[1] = *slope;
                }
            }
            SigmaKind::Sine { amplitude, frequency } => {
                let phase = frequency * x;
                let mut fact = 1.0;
                let mut wpow = 1.0;
                for (m, o) in out.iter_mut().enumerate() {
                    if m > 0 {
                        fact *= m as f64;
                        wpow *= frequency;
                    }
                    let d = match m % 4 {
                        0 => phase.sin(),
                        1 => phase.cos(),
                        2 => -phase.sin(),
                        _ => -phase.cos(),
                    };
                    *o = amplitude * wpow * d / fact;
                }
            }
            SigmaKind::Polynomial(c) => {
                for (m, o) in out.iter_mut().enumerate() {
                    // Σ_j C(j, m) c_j x^{j−m}
                    let mut s = 0.0;
                    for j in (m..c.len()).rev() {
                        s = s * x + binomial(j, m) * c[j];
                    }
                    *o = s;
                }
            }
            SigmaKind::Custom(s) => return s.taylor(x, order),
        }
        if self.is_zero(x) {
            out[0] = 0.0;
        }
        Some(out)
    }

    fn raw_value(&self, x: f64) -> f64 {
        match &self.kind {
            SigmaKind::Constant(c) => *c,
            SigmaKind::Linear { slope, root } => slope * (x - root),
            SigmaKind::Sine { amplitude, frequency } => amplitude * (frequency * x).sin(),
            SigmaKind::Polynomial(c) => horner(c, x),
            SigmaKind::Custom(s) => s.value(x),
        }
    }

    fn raw_d1(&self, x: f64) -> f64 {
        match &self.kind {
            SigmaKind::Constant(_) => 0.0,
            SigmaKind::Linear { slope, .. } => *slope,
            SigmaKind::Sine { amplitude, frequency } => amplitude * frequency * (frequency * x).cos(),
            SigmaKind::Polynomial(c) => {
                let d: Vec<f64> = (1..c.len()).map(|j| j as f64 * c[j]).collect();
                horner(&d, x)
            }
            SigmaKind::Custom(s) => s.derivative1(x),
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn finite(name: &str, v: f64) -> Result<(), TransformError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(TransformError::InvalidSigma(format!("{name} must be finite, got {v}")))
    }
}

fn check_window(w: (f64, f64)) -> Result<(), TransformError> {
    if w.0.is_finite() && w.1.is_finite() && w.0 < w.1 {
        Ok(())
    } else {
        Err(TransformError::InvalidSigma(format!("window must be a finite interval, got {w:?}")))
    }
}

fn sampled_lipschitz(kind: &SigmaKind, window: (f64, f64)) -> f64 {
    let probe = SigmaFunction { kind: kind.clone(), zeros: Vec::new(), lipschitz: 0.0 };
    let n = 4096;
    let h = (window.1 - window.0) / n as f64;
    let max = (0..=n).map(|i| probe.raw_d1(window.0 + i as f64 * h).abs()).fold(0.0, f64::max);
    // Sampling can miss the peak between nodes; pad by the curvature bound.
    let curv = (0..=n).map(|i| probe.derivative2(window.0 + i as f64 * h).abs()).fold(0.0, f64::max);
    max + 0.5 * h * curv
}
