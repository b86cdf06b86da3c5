use super::{Density1D, LevyError};

/// A Lévy jump measure ν on ℝ∖{0}.
#[derive(Clone, Debug)]
pub enum LevyMeasure {
    Null,
    /// Symmetric α-stable measure `scale · dy / |y|^{1+α}`.
    AlphaStable { alpha: f64, scale: f64 },
    /// `rate · μ(dy)` for a jump-size density μ.
    CompoundPoisson { rate: f64, jumps: Density1D },
    Sum(Vec<LevyMeasure>),
}

impl LevyMeasure {
    pub fn alpha_stable(alpha: f64, scale: f64) -> Result<Self, LevyError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(LevyError::InvalidParameter(format!("stability index must lie in (0, 2), got {alpha}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(LevyError::InvalidParameter(format!("stable scale must be positive, got {scale}")));
        }
        Ok(LevyMeasure::AlphaStable { alpha, scale })
    }

    pub fn compound_poisson(rate: f64, jumps: Density1D) -> Result<Self, LevyError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(LevyError::InvalidParameter(format!("jump intensity must be positive, got {rate}")));
        }
        let (lo, hi) = jumps.support();
        let total = jumps.mass(lo, hi);
        if (total - 1.0).abs() > 1e-8 {
            return Err(LevyError::NotNormalized(total));
        }
        Ok(LevyMeasure::CompoundPoisson { rate, jumps })
    }

    pub fn sum(parts: Vec<LevyMeasure>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                LevyMeasure::Null => {}
                LevyMeasure::Sum(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => LevyMeasure::Null,
            1 => flat.pop().unwrap(),
            _ => LevyMeasure::Sum(flat),
        }
    }

    pub fn is_null(&self) -> bool {
        match self {
            LevyMeasure::Null => true,
            LevyMeasure::Sum(p) => p.iter().all(|m| m.is_null()),
            _ => false,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            LevyMeasure::Null | LevyMeasure::AlphaStable { .. } => true,
            LevyMeasure::CompoundPoisson { jumps, .. } => jumps.is_symmetric(),
            LevyMeasure::Sum(p) => p.iter().all(|m| m.is_symmetric()),
        }
    }

    /// `ν(|y| > r)`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        match self {
            LevyMeasure::Null => 0.0,
            LevyMeasure::AlphaStable { alpha, scale } => 2.0 * scale * r.powf(-alpha) / alpha,
            LevyMeasure::CompoundPoisson { rate, jumps } => rate * (1.0 - jumps.mass(-r, r)).max(0.0),
            LevyMeasure::Sum(p) => p.iter().map(|m| m.tail_mass(r)).sum(),
        }
    }

    /// `∫_{lo < |y| ≤ hi} y^k ν(dy)` for `k ∈ {0, 1, 2}`; `hi` may be infinite
    /// when the integral converges.
    pub fn band_moment(&self, k: i32, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            LevyMeasure::Null => 0.0,
            LevyMeasure::AlphaStable { alpha, scale } => {
                if k % 2 == 1 {
                    return 0.0;
                }
                let p = k as f64 - alpha;
                let upper = if hi.is_infinite() { 0.0 } else { hi.powf(p) };
                let lower = if lo == 0.0 { 0.0 } else { lo.powf(p) };
                2.0 * scale * (upper - lower) / p
            }
            LevyMeasure::CompoundPoisson { rate, jumps } => {
                rate * (jumps.moment(k, lo, hi) + jumps.moment(k, -hi, -lo))
            }
            LevyMeasure::Sum(p) => p.iter().map(|m| m.band_moment(k, lo, hi)).sum(),
        }
    }

    /// `∫ (y² ∧ 1) ν(dy)`; finite for every representable measure.
    pub fn truncated_second_moment(&self) -> f64 {
        self.band_moment(2, 0.0, 1.0) + self.tail_mass(1.0)
    }

    /// Smallest cutoff `ymax` (to 1e-3 relative) with
    /// `ν(|y| > ymax) < rel · ν(|y| > delta)`.
    pub fn quadrature_cutoff(&self, delta: f64, rel: f64) -> f64 {
        let target = rel * self.tail_mass(delta);
        if target <= 0.0 {
            return 1.0_f64.max(2.0 * delta);
        }
        if let Some(b) = self.support_radius() {
            if self.tail_mass(b) <= target {
                // Bounded supports: search below the radius.
                return bisect_cutoff(self, delta, b, target);
            }
        }
        let mut hi = (2.0 * delta).max(1.0);
        while self.tail_mass(hi) >= target && hi < 1e12 {
            hi *= 2.0;
        }
        bisect_cutoff(self, delta, hi, target)
    }

    fn support_radius(&self) -> Option<f64> {
        match self {
            LevyMeasure::Null => Some(0.0),
            LevyMeasure::AlphaStable { .. } => None,
            LevyMeasure::CompoundPoisson { jumps, .. } => {
                let (lo, hi) = jumps.support();
                let r = lo.abs().max(hi.abs());
                r.is_finite().then_some(r)
            }
            LevyMeasure::Sum(p) => p.iter().map(|m| m.support_radius()).try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r))),
        }
    }
}

fn bisect_cutoff(nu: &LevyMeasure, delta: f64, hi: f64, target: f64) -> f64 {
    let mut lo = delta;
    let mut hi = hi;
    if nu.tail_mass(lo) < target {
        return lo;
    }
    while (hi - lo) > 1e-3 * hi {
        let mid = (lo * hi).sqrt();
        if nu.tail_mass(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Generating triplet `(b, A, ν)` of a one-dimensional Lévy process.
#[derive(Clone, Debug)]
pub struct LevyTriplet {
    pub b: f64,
    pub a: f64,
    pub nu: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(b: f64, a: f64, nu: LevyMeasure) -> Result<Self, LevyError> {
        if !(a >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(LevyError::InvalidParameter(format!("triplet needs finite b and A >= 0, got b={b}, A={a}")));
        }
        Ok(Self { b, a, nu })
    }
}

/// Drift owed for truncating jumps below `epsilon`: `∫_{ε<|y|<1} y ν(dy)`.
pub fn small_jump_compensation(nu: &LevyMeasure, epsilon: f64) -> Result<f64, LevyError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(LevyError::InvalidTruncation(epsilon));
    }
    Ok(nu.band_moment(1, epsilon, 1.0))
}
