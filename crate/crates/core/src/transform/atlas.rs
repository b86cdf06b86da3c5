use super::{phi_coefficients, SigmaFunction, SigmaKind, TransformError};
use crate::quadrature::integrate;

/// Default truncation order of the `Φ_k` series at zeros of σ.
pub const DEFAULT_SERIES_ORDER: usize = 20;

const SERIES_TAIL_LIMIT: f64 = 1e-8;
const MAX_NEWTON: usize = 200;
const MAX_LOG_COORD: f64 = 700.0;

#[derive(Clone, Copy, Debug)]
pub struct AtlasOptions {
    pub series_order: usize,
    /// Use exact transforms for constant and linear σ.
    pub closed_form: bool,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self { series_order: DEFAULT_SERIES_ORDER, closed_form: true }
    }
}

/// Integration coordinate on one σ-interval. Near a finite endpoint the
/// coordinate is the log-distance to it, so `1/σ` becomes bounded.
#[derive(Clone, Copy, Debug)]
enum Coord {
    Plain,
    LeftLog(f64),
    RightLog(f64),
    Logit(f64, f64),
}

impl Coord {
    fn to_s(self, x: f64) -> f64 {
        match self {
            Coord::Plain => x,
            Coord::LeftLog(l) => (x - l).ln(),
            Coord::RightLog(r) => (r - x).ln(),
            Coord::Logit(l, r) => ((x - l) / (r - x)).ln(),
        }
    }

    fn to_x(self, s: f64) -> f64 {
        match self {
            Coord::Plain => s,
            Coord::LeftLog(l) => l + s.exp(),
            Coord::RightLog(r) => r - s.exp(),
            Coord::Logit(l, r) => {
                if s < 0.0 {
                    l + (r - l) / (1.0 + (-s).exp())
                } else {
                    r - (r - l) / (1.0 + s.exp())
                }
            }
        }
    }

    /// `(dx/ds, σ(x(s)))`, with σ evaluated from the nearer zero.
    fn jacobian_sigma(self, sigma: &SigmaFunction, s: f64) -> (f64, f64) {
        match self {
            Coord::Plain => (1.0, sigma.value(s)),
            Coord::LeftLog(l) => {
                let d = s.exp();
                (d, sigma.value_offset(l, d))
            }
            Coord::RightLog(r) => {
                let d = s.exp();
                (-d, sigma.value_offset(r, -d))
            }
            Coord::Logit(l, r) => {
                let w = r - l;
                let dl = w / (1.0 + (-s).exp());
                let dr = w / (1.0 + s.exp());
                let sig = if s < 0.0 { sigma.value_offset(l, dl) } else { sigma.value_offset(r, -dr) };
                (dl * dr / w, sig)
            }
        }
    }

    fn bounded(self) -> bool {
        !matches!(self, Coord::Plain)
    }
}

#[derive(Clone, Copy, Debug)]
enum ClosedForm {
    None,
    Constant(f64),
    Linear { slope: f64, root: f64 },
}

/// The family of transforms `H_i` on the σ-intervals, their inverses and
/// the glued jump map `H̃(x, y) = H_i⁻¹(H_i(x) + y)`.
#[derive(Clone, Debug)]
pub struct TransformAtlas {
    sigma: SigmaFunction,
    anchors: Vec<f64>,
    coords: Vec<Coord>,
    /// Sign of `dH/ds` per interval.
    orientation: Vec<f64>,
    phi: Vec<Vec<f64>>,
    closed: ClosedForm,
}

impl TransformAtlas {
    pub fn new(sigma: SigmaFunction) -> Result<Self, TransformError> {
        Self::with_options(sigma, AtlasOptions::default())
    }

    pub fn with_options(sigma: SigmaFunction, opts: AtlasOptions) -> Result<Self, TransformError> {
        let closed = match (opts.closed_form, sigma.kind()) {
            (true, SigmaKind::Constant(c)) => ClosedForm::Constant(*c),
            (true, SigmaKind::Linear { slope, root }) => ClosedForm::Linear { slope: *slope, root: *root },
            _ => ClosedForm::None,
        };
        if sigma.is_identically_zero() {
            return Ok(Self {
                sigma,
                anchors: Vec::new(),
                coords: Vec::new(),
                orientation: Vec::new(),
                phi: Vec::new(),
                closed,
            });
        }
        let z = sigma.zeros().to_vec();
        let n = z.len();
        let mut anchors = Vec::with_capacity(n + 1);
        let mut coords = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (a, c) = match (i.checked_sub(1).map(|j| z[j]), z.get(i).copied()) {
                (None, None) => (0.0, Coord::Plain),
                (None, Some(r)) => (r - 1.0, Coord::RightLog(r)),
                (Some(l), None) => (l + 1.0, Coord::LeftLog(l)),
                (Some(l), Some(r)) => (0.5 * (l + r), Coord::Logit(l, r)),
            };
            anchors.push(a);
            coords.push(c);
        }
        let mut orientation = Vec::with_capacity(n + 1);
        for (i, c) in coords.iter().enumerate() {
            let s = c.to_s(anchors[i]);
            let (jac, sig) = c.jacobian_sigma(&sigma, s);
            if sig == 0.0 || !sig.is_finite() {
                return Err(TransformError::InvalidSigma(format!(
                    "sigma vanishes at anchor {} of interval {i}; list every zero",
                    anchors[i]
                )));
            }
            orientation.push((jac / sig).signum());
        }
        let phi = z
            .iter()
            .map(|&zero| phi_coefficients(&sigma, zero, opts.series_order))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { sigma, anchors, coords, orientation, phi, closed })
    }

    pub fn sigma(&self) -> &SigmaFunction {
        &self.sigma
    }

    pub fn zeros(&self) -> &[f64] {
        self.sigma.zeros()
    }

    /// `(slope, root)` when the exact transform of a linear σ is in use.
    pub fn linear_closed_form(&self) -> Option<(f64, f64)> {
        match self.closed {
            ClosedForm::Linear { slope, root } => Some((slope, root)),
            _ => None,
        }
    }

    /// `e^{slope·y}`-type jump multiplier used by the linear closed form.
    #[inline]
    pub fn linear_jump(slope: f64, root: f64, x: f64, y: f64) -> f64 {
        root + (x - root) * (slope * y).exp()
    }

    pub fn interval_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn anchor(&self, interval: usize) -> f64 {
        self.anchors[interval]
    }

    /// Open interval `(x_i, x_{i+1})`, with infinite ends outside the zeros.
    pub fn interval_bounds(&self, interval: usize) -> (f64, f64) {
        let z = self.zeros();
        let lo = if interval == 0 { f64::NEG_INFINITY } else { z[interval - 1] };
        let hi = z.get(interval).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// `Φ_k` coefficients at the `j`-th zero.
    pub fn phi_series(&self, zero_index: usize) -> &[f64] {
        &self.phi[zero_index]
    }

    /// Index of the σ-interval containing `x`.
    pub fn interval_of(&self, x: f64) -> Result<usize, TransformError> {
        if self.sigma.is_identically_zero() || !x.is_finite() {
            return Err(TransformError::ZeroOfSigma(x));
        }
        let z = self.zeros();
        let i = z.partition_point(|&zi| zi < x);
        if z.get(i) == Some(&x) {
            return Err(TransformError::ZeroOfSigma(x));
        }
        Ok(i)
    }

    /// `(i, H_i(x))` with `H_i(x) = ∫_{a_i}^x dt/σ(t)`.
    pub fn h_forward(&self, x: f64) -> Result<(usize, f64), TransformError> {
        let i = self.interval_of(x)?;
        let v = match self.closed {
            ClosedForm::Constant(c) => (x - self.anchors[i]) / c,
            ClosedForm::Linear { slope, root } => ((x - root) / (self.anchors[i] - root)).ln() / slope,
            ClosedForm::None => {
                let c = self.coords[i];
                self.integral(i, c.to_s(self.anchors[i]), c.to_s(x))?
            }
        };
        Ok((i, v))
    }

    /// `H_i⁻¹(u)`.
    pub fn h_inverse(&self, interval: usize, u: f64) -> Result<f64, TransformError> {
        if interval >= self.interval_count() {
            return Err(TransformError::InvalidInterval(interval));
        }
        let a = self.anchors[interval];
        match self.closed {
            ClosedForm::Constant(c) => Ok(a + c * u),
            ClosedForm::Linear { slope, root } => Ok(root + (a - root) * (slope * u).exp()),
            ClosedForm::None => {
                let c = self.coords[interval];
                let s = self.solve_shift(interval, c.to_s(a), u)?;
                Ok(c.to_x(s))
            }
        }
    }

    /// Marcus jump map: `H_i⁻¹(H_i(x) + y)` on interval `i`, and `x` itself at
    /// zeros of σ.
    pub fn h_tilde(&self, x: f64, y: f64) -> Result<f64, TransformError> {
        match self.closed {
            ClosedForm::Constant(c) => return Ok(x + c * y),
            ClosedForm::Linear { slope, root } => return Ok(Self::linear_jump(slope, root, x, y)),
            ClosedForm::None => {}
        }
        if y == 0.0 || self.sigma.is_identically_zero() {
            return Ok(x);
        }
        let i = match self.interval_of(x) {
            Ok(i) => i,
            Err(TransformError::ZeroOfSigma(_)) => return Ok(x),
            Err(e) => return Err(e),
        };
        let c = self.coords[i];
        let s = self.solve_shift(i, c.to_s(x), y)?;
        Ok(c.to_x(s))
    }

    /// `∂H̃/∂x (x, y)`: `σ(H̃)/σ(x)` off the zero set, the `Φ_k` series at zeros.
    pub fn h_tilde_dx(&self, x: f64, y: f64) -> Result<f64, TransformError> {
        match self.closed {
            ClosedForm::Constant(_) => return Ok(1.0),
            ClosedForm::Linear { slope, .. } => return Ok((slope * y).exp()),
            ClosedForm::None => {}
        }
        if y == 0.0 || self.sigma.is_identically_zero() {
            return Ok(1.0);
        }
        let i = match self.interval_of(x) {
            Ok(i) => i,
            Err(TransformError::ZeroOfSigma(_)) => {
                let j = self.zeros().partition_point(|&z| z < x);
                return self.series_dx(j, y);
            }
            Err(e) => return Err(e),
        };
        let c = self.coords[i];
        let s0 = c.to_s(x);
        let s1 = self.solve_shift(i, s0, y)?;
        let (_, sig0) = c.jacobian_sigma(&self.sigma, s0);
        let (_, sig1) = c.jacobian_sigma(&self.sigma, s1);
        Ok(sig1 / sig0)
    }

    /// `Σ_{k≤K} Φ_k(x_j) y^k / k!` with the truncated-tail sentinel.
    pub fn series_dx(&self, zero_index: usize, y: f64) -> Result<f64, TransformError> {
        let phi = &self.phi[zero_index];
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut last = 0.0;
        for (k, p) in phi.iter().enumerate() {
            if k > 0 {
                term *= y / k as f64;
            }
            last = p * term;
            sum += last;
        }
        let tail = last.abs() * (self.sigma.lipschitz_bound() * y).abs().exp();
        if tail > SERIES_TAIL_LIMIT || !sum.is_finite() {
            return Err(TransformError::SeriesDivergence { y, tail });
        }
        Ok(sum)
    }

    fn integrand(&self, i: usize, s: f64) -> f64 {
        let (jac, sig) = self.coords[i].jacobian_sigma(&self.sigma, s);
        jac / sig
    }

    fn integral(&self, i: usize, s0: f64, s1: f64) -> Result<f64, TransformError> {
        if s0 == s1 {
            return Ok(0.0);
        }
        integrate(|s| self.integrand(i, s), s0, s1, 1e-14, 1e-13).map_err(|f| {
            TransformError::NonConvergence(format!(
                "quadrature of 1/sigma on interval {i} over [{s0}, {s1}] stalled at error {:.3e}",
                f.error
            ))
        })
    }

    /// Finds `s` with `∫_{s0}^{s} (dH/ds) = y` by safeguarded Newton.
    fn solve_shift(&self, i: usize, s0: f64, y: f64) -> Result<f64, TransformError> {
        if y == 0.0 {
            return Ok(s0);
        }
        let c = self.coords[i];
        let sgn = self.orientation[i];
        // G(s) = sgn·(∫_{s0}^{s} − y) is increasing in s.
        let mut s = s0;
        let mut g = -sgn * y;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut cap = if c.bounded() { 2.0 } else { 1.0 + s0.abs() };
        let tol = 1e-13 * y.abs().max(1.0);
        for _ in 0..MAX_NEWTON {
            if g < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = self.integrand(i, s).abs();
            let newton = s - g / slope;
            let cand = if lo.is_finite() && hi.is_finite() {
                if newton > lo && newton < hi && newton.is_finite() {
                    newton
                } else {
                    0.5 * (lo + hi)
                }
            } else {
                let step = if newton.is_finite() { newton - s } else { g.signum() * -cap };
                let step = step.clamp(-cap, cap);
                cap *= 2.0;
                s + step
            };
            let out_of_range = if c.bounded() { cand.abs() > MAX_LOG_COORD } else { cand.abs() > 1e300 };
            if out_of_range || !cand.is_finite() {
                return Err(TransformError::NonConvergence(format!(
                    "shift {y} leaves the range of H on interval {i}"
                )));
            }
            let g_new = g + sgn * self.integral(i, s, cand)?;
            if !g_new.is_finite() {
                return Err(TransformError::NonConvergence(format!("non-finite H on interval {i}")));
            }
            let ds = (cand - s).abs();
            s = cand;
            g = g_new;
            if g.abs() <= tol || ds <= 4.0 * f64::EPSILON * s.abs().max(1e-300) {
                return Ok(s);
            }
        }
        Err(TransformError::NonConvergence(format!("Newton iteration cap reached on interval {i} for shift {y}")))
    }
}
