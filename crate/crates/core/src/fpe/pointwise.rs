use super::FpeOperatorData;

/// Nonlocal term of the Fokker-Planck equation at the cell centres for a
/// density known in closed form:
///
/// `Σ_k w_k [∂H̃/∂x(x,−y_k) p(H̃(x,−y_k)) − p(x) + y_k 1{|y_k|<1} (σp)'(x)] + c_δ q(x)`
///
/// where `q` is the second `y`-derivative of the bracket at `y = 0`, taken
/// by central differences with step `δ/4`. `dsp` is `(σp)'`.
pub fn pointwise_nonlocal<P, D>(op: &FpeOperatorData, p: P, dsp: D) -> Vec<f64>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let atlas = op.model.atlas();
    let k = op.rule.len();
    let h = op.delta / 4.0;
    (0..op.spec.n)
        .map(|j| {
            let x = op.spec.center(j);
            let px = p(x);
            let dx_sp = dsp(x);
            let mut s = 0.0;
            for (&y, kernel) in op.rule.nodes.iter().zip(&op.kernel[j * k..(j + 1) * k]) {
                let comp = if y.abs() < 1.0 { y * dx_sp } else { 0.0 };
                s += kernel.weight * (kernel.jacobian * p(kernel.pullback) - px + comp);
            }
            let g = |y: f64| -> f64 {
                let pb = atlas.h_tilde(x, -y).unwrap_or(x);
                let jac = atlas.h_tilde_dx(x, -y).unwrap_or(1.0);
                jac * p(pb) - px + y * dx_sp
            };
            let q = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
            s + op.c_delta * q
        })
        .collect()
}

/// The generator-side jump operator at the cell centres for a smooth test
/// function:
///
/// `Σ_k w_k [φ(H̃(x,y_k)) − φ(x) − φ'(x)σ(x) y_k 1{|y_k|<1}] + c_δ q*(x)`
///
/// assembled from forward jump maps, independently of the kernel table.
pub fn pointwise_generator<F, D>(op: &FpeOperatorData, phi: F, dphi: D) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let atlas = op.model.atlas();
    let sigma = atlas.sigma();
    let h = op.delta / 4.0;
    (0..op.spec.n)
        .map(|j| {
            let x = op.spec.center(j);
            let fx = phi(x);
            let slope = dphi(x) * sigma.value(x);
            let g = |y: f64| -> f64 {
                let comp = if y.abs() < 1.0 { slope * y } else { 0.0 };
                phi(atlas.h_tilde(x, y).unwrap_or(x)) - fx - comp
            };
            let s: f64 = op.rule.nodes.iter().zip(&op.rule.weights).map(|(&y, &w)| w * g(y)).sum();
            let q = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
            s + op.c_delta * q
        })
        .collect()
}
