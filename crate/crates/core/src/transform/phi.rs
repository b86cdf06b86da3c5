use super::{SigmaFunction, TransformError};

/// `Φ_0 … Φ_K` at a zero of σ, where `Φ_k = (σ Φ_{k−1})'`, `Φ_0 = 1`.
///
/// With a Taylor jet of σ available the nesting is carried out exactly on
/// truncated power series. Otherwise only `σ'(zero)` is needed, since the
/// product rule at a zero leaves `Φ_k = σ' Φ_{k−1}`; it is cross-checked
/// against Richardson-extrapolated central differences.
pub fn phi_coefficients(sigma: &SigmaFunction, zero: f64, k_max: usize) -> Result<Vec<f64>, TransformError> {
    if !sigma.is_zero(zero) {
        return Err(TransformError::InvalidSigma(format!("{zero} is not a listed zero of sigma")));
    }
    if let Some(jet) = sigma.taylor(zero, k_max) {
        return Ok(nested_series(&jet, k_max));
    }
    let d = richardson_derivative(sigma, zero)?;
    let analytic = sigma.derivative1(zero);
    if (d - analytic).abs() > 1e-6 * analytic.abs().max(1.0) {
        return Err(TransformError::IllConditioned(format!(
            "derivative at {zero}: analytic {analytic}, extrapolated {d}"
        )));
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let mut p = 1.0;
    for _ in 0..=k_max {
        out.push(p);
        p *= analytic;
    }
    Ok(out)
}

fn nested_series(jet: &[f64], k_max: usize) -> Vec<f64> {
    let mut cur = vec![0.0; k_max + 1];
    cur[0] = 1.0;
    let mut out = vec![1.0];
    for _ in 0..k_max {
        let m = cur.len();
        let prod: Vec<f64> = (0..m).map(|j| (0..=j).map(|a| jet[a] * cur[j - a]).sum()).collect();
        cur = (1..m).map(|j| j as f64 * prod[j]).collect();
        out.push(cur[0]);
    }
    out
}

fn richardson_derivative(sigma: &SigmaFunction, x: f64) -> Result<f64, TransformError> {
    let central = |h: f64| (sigma.value(x + h) - sigma.value(x - h)) / (2.0 * h);
    let steps = [1e-2, 1e-3, 1e-4, 1e-5];
    let est: Vec<f64> = steps.iter().map(|&h| (4.0 * central(h / 2.0) - central(h)) / 3.0).collect();
    let best = est[2];
    let spread = est[1..].iter().map(|e| (e - best).abs()).fold(0.0, f64::max);
    if spread > 1e-6 * best.abs().max(1.0) {
        return Err(TransformError::IllConditioned(format!(
            "Richardson estimates of sigma' at {x} disagree by {spread:.3e}"
        )));
    }
    Ok(best)
}
