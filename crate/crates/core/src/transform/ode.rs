use super::{SigmaFunction, TransformError};

// Dormand-Prince 5(4) tableau.

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Tolerances for [`marcus_map_ode_with`].
#[derive(Clone, Copy, Debug)]
pub struct OdeTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-12 }
    }
}

/// Time-one flow of `dy/dz = r σ(y)` from `y(0) = x`.
pub fn marcus_map_ode(sigma: &SigmaFunction, r: f64, x: f64) -> Result<f64, TransformError> {
    marcus_map_ode_with(sigma, r, x, OdeTolerance::default())
}

pub fn marcus_map_ode_with(sigma: &SigmaFunction, r: f64, x: f64, tol: OdeTolerance) -> Result<f64, TransformError> {
    if r == 0.0 {
        return Ok(x);
    }
    let f = |y: f64| r * sigma.value(y);
    let mut z = 0.0;
    let mut y = x;
    let mut h = 0.05f64;
    let mut k = [0.0f64; 7];
    k[0] = f(y);
    let mut steps = 0usize;
    while z < 1.0 {
        if h < 1e-14 {
            return Err(TransformError::StepUnderflow { z, h });
        }
        steps += 1;
        if steps > 1_000_000 {
            return Err(TransformError::StepUnderflow { z, h });
        }
        let h_try = h.min(1.0 - z);
        for s in 1..7 {
            let inc: f64 = (0..s).map(|j| A[s][j] * k[j]).sum();
            k[s] = f(y + h_try * inc);
        }
        let y5 = y + h_try * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
        let y4 = y + h_try * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
        let scale = tol.abs + tol.rel * y.abs().max(y5.abs());
        let err = ((y5 - y4) / scale).abs();
        if !y5.is_finite() {
            h = 0.25 * h_try;
            continue;
        }
        if err <= 1.0 {
            z += h_try;
            y = y5;
            // First-same-as-last: the seventh stage is f at the new point.
            k[0] = k[6];
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_try * grow;
        } else {
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_flow() {
        let s = SigmaFunction::constant(1.7).unwrap();
        let y = marcus_map_ode(&s, 0.3, -2.0).unwrap();
        assert!((y - (-2.0 + 1.7 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn linear_flow() {
        let s = SigmaFunction::linear(1.0, 0.0).unwrap();
        let y = marcus_map_ode(&s, 0.7, 2.0).unwrap();
        assert!((y - 2.0 * 0.7f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn no_flow() {
        let s = SigmaFunction::sine(1.0, 1.0, (-5.0, 5.0)).unwrap();
        assert_eq!(marcus_map_ode(&s, 0.0, 1.234).unwrap(), 1.234);
    }

    #[test]
    fn logistic_flow_matches_closed_form() {
        // σ = y(1 − y): y(1) = x e^r / (1 − x + x e^r)
        let s = SigmaFunction::polynomial(vec![0.0, 1.0, -1.0], vec![0.0, 1.0], (-1.0, 2.0)).unwrap();
        let (x, r) = (0.2f64, 1.5f64);
        let exact = x * r.exp() / (1.0 - x + x * r.exp());
        assert!((marcus_map_ode(&s, r, x).unwrap() - exact).abs() < 1e-10);
    }
}
