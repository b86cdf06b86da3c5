use crate::exec::{map_indices, Execution};
use crate::levy::{measure_quadrature, QuadratureRule};
use crate::sde::SdeModel;

use super::{FpeError, GridSpec};

/// Discretisation of the jump measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadParams {
    /// Jumps with `|y| < delta` enter as an extra diffusion.
    pub delta: f64,
    /// Cutoff for large jumps; chosen from `tail_rel` when absent.
    pub ymax: Option<f64>,
    /// Nodes per side of the jump quadrature.
    pub n_quad: usize,
    /// `ymax` is the smallest value with `ν(|y| > ymax) < tail_rel · ν(|y| > delta)`.
    pub tail_rel: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self { delta: 1e-3, ymax: None, n_quad: 64, tail_rel: 1e-6 }
    }
}

/// One interpolation entry of the remap table: the weighted Hermite
/// coefficients acting on `(P_c, m_c, P_{c+1}, m_{c+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct RemapEntry {
    pub cell: u32,
    pub coef: [f64; 4],
}

/// Pointwise kernel at one node for one quadrature node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEntry {
    /// `H̃(x_j, −y_k)`
    pub pullback: f64,
    /// `∂H̃/∂x (x_j, −y_k)`
    pub jacobian: f64,
    pub weight: f64,
}

/// Everything the time stepper needs, precomputed once.
#[derive(Clone, Debug)]
pub struct FpeOperatorData {
    pub spec: GridSpec,
    /// Advective velocity `f + (b − m)σ` at the cell edges (flux form).
    pub velocity: Vec<f64>,
    /// `σ` at cell centres and edges.
    pub sigma_centers: Vec<f64>,
    pub sigma_edges: Vec<f64>,
    /// `A + ∫_{|y|<δ} y² ν(dy)`: Brownian variance plus the small-jump part.
    pub a_eff: f64,
    /// `∫_{|y|<δ} y²/2 ν(dy)`
    pub c_delta: f64,
    /// `m = Σ_{|y_k|<1} w_k y_k`, the compensator drift coefficient of `σ`.
    pub compensator: f64,
    pub rule: QuadratureRule,
    pub delta: f64,
    pub ymax: f64,
    /// `Σ w_k`, the explicit jump rate.
    pub total_rate: f64,
    /// `ν(|y| > ymax)`, charged to the leak budget.
    pub tail_rate: f64,
    /// Edges that coincide with zeros of σ; no mass crosses them by jumps or
    /// diffusion.
    pub zero_edges: Vec<bool>,
    /// Row-major `n × rule.len()`.
    pub kernel: Vec<KernelEntry>,
    pub(crate) remap: Vec<Vec<RemapEntry>>,
    /// Per-edge weight of pullbacks landing above `xmax`.
    pub(crate) above: Vec<f64>,
    pub(crate) model: SdeModel,
}

/// Assembles the discrete operator of the Fokker-Planck equation of `model`.
pub fn assemble_operator(
    model: &SdeModel,
    spec: GridSpec,
    quad: QuadParams,
    exec: Execution,
) -> Result<FpeOperatorData, FpeError> {
    GridSpec::new(spec.xmin, spec.xmax, spec.n).map_err(FpeError::InvalidInput)?;
    if !(quad.delta > 0.0 && quad.delta < 1.0) {
        return Err(FpeError::InvalidInput(format!("delta must lie in (0, 1), got {}", quad.delta)));
    }
    if quad.n_quad == 0 {
        return Err(FpeError::InvalidInput("nQuad must be positive".into()));
    }
    let n = spec.n;
    let dx = spec.dx();
    let sigma = model.sigma();
    let nu = &model.triplet.nu;

    let mut zero_edges = vec![false; n + 1];
    for &z in sigma.zeros() {
        if z <= spec.xmin || z >= spec.xmax {
            continue;
        }
        let e = ((z - spec.xmin) / dx).round() as usize;
        if (spec.edge(e) - z).abs() > 1e-12 {
            return Err(FpeError::ZeroNotAligned { zero: z, nearest_edge: spec.edge(e) });
        }
        zero_edges[e] = true;
    }
    let edges: Vec<f64> = (0..=n).map(|e| spec.edge(e)).collect();
    let sigma_edges: Vec<f64> =
        edges.iter().zip(&zero_edges).map(|(&x, &z)| if z { 0.0 } else { sigma.value(x) }).collect();
    let sigma_centers: Vec<f64> = (0..n).map(|j| sigma.value(spec.center(j))).collect();

    let (rule, ymax, tail_rate) = if nu.is_null() {
        (QuadratureRule::default(), quad.ymax.unwrap_or(1.0), 0.0)
    } else {
        let ymax = quad.ymax.unwrap_or_else(|| nu.quadrature_cutoff(quad.delta, quad.tail_rel));
        if !(ymax > quad.delta) {
            return Err(FpeError::InvalidInput(format!("ymax {ymax} must exceed delta {}", quad.delta)));
        }
        let rule = measure_quadrature(nu, quad.delta, ymax, quad.n_quad).map_err(|e| FpeError::InvalidInput(e.to_string()))?;
        (rule, ymax, nu.tail_mass(ymax))
    };
    let c_delta = 0.5 * nu.band_moment(2, 0.0, quad.delta);
    let a_eff = model.triplet.a + 2.0 * c_delta;
    let compensator: f64 =
        rule.nodes.iter().zip(&rule.weights).filter(|(y, _)| y.abs() < 1.0).map(|(y, w)| w * y).sum();
    let total_rate = rule.total_weight();
    let beta = model.triplet.b - compensator;
    let velocity: Vec<f64> =
        edges.iter().zip(&sigma_edges).map(|(&x, &s)| model.drift.eval(x) + beta * s).collect();

    let atlas = model.atlas();
    let k = rule.len();

    // Pullbacks of the edges, one row per edge.
    let pullbacks: Vec<Result<Vec<f64>, FpeError>> = map_indices(exec, n + 1, |e| {
        if zero_edges[e] {
            return Ok(vec![edges[e]; k]);
        }
        rule.nodes.iter().map(|&y| atlas.h_tilde(edges[e], -y).map_err(FpeError::from)).collect()
    });
    let pullbacks: Vec<Vec<f64>> = pullbacks.into_iter().collect::<Result<_, _>>()?;

    if k > 0 {
        let (kmin, _) = rule
            .nodes
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, y)| if y.abs() < acc.1 { (i, y.abs()) } else { acc });
        for (e, row) in pullbacks.iter().enumerate() {
            let disp = (row[kmin] - edges[e]).abs();
            if disp > 10.0 * dx {
                return Err(FpeError::GridTooCoarse { x: edges[e], displacement: disp, dx });
            }
        }
    }

    let rows: Vec<(Vec<RemapEntry>, f64)> = map_indices(exec, n + 1, |e| {
        if zero_edges[e] || k == 0 {
            return (Vec::new(), 0.0);
        }
        remap_row(&spec, &pullbacks[e], &rule.weights)
    });
    let (remap, above): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

    let kernel_rows: Vec<Result<Vec<KernelEntry>, FpeError>> = map_indices(exec, n, |j| {
        let x = spec.center(j);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&y, &w)| {
                let pullback = atlas.h_tilde(x, -y)?;
                let jacobian = atlas.h_tilde_dx(x, -y)?;
                Ok(KernelEntry { pullback, jacobian, weight: w })
            })
            .collect()
    });
    let mut kernel = Vec::with_capacity(n * k);
    for r in kernel_rows {
        kernel.extend(r?);
    }

    Ok(FpeOperatorData {
        spec,
        velocity,
        sigma_centers,
        sigma_edges,
        a_eff,
        c_delta,
        compensator,
        rule,
        delta: quad.delta,
        ymax,
        total_rate,
        tail_rate,
        zero_edges,
        kernel,
        remap,
        above,
        model: model.clone(),
    })
}

/// Hermite coefficients of the cumulative mass at each pullback, merged by
/// cell. Pullbacks below `xmin` contribute nothing; those above `xmax` see
/// the total mass.
fn remap_row(spec: &GridSpec, pullbacks: &[f64], weights: &[f64]) -> (Vec<RemapEntry>, f64) {
    let dx = spec.dx();
    let n = spec.n;
    let mut above = 0.0;
    let mut entries: Vec<RemapEntry> = Vec::new();
    for (&q, &w) in pullbacks.iter().zip(weights) {
        if q <= spec.xmin {
            continue;
        }
        if q >= spec.xmax {
            above += w;
            continue;
        }
        let u = (q - spec.xmin) / dx;
        let c = (u.floor() as usize).min(n - 1);
        let t = u - c as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let coef = [w * h00, w * h10 * dx, w * h01, w * h11 * dx];
        match entries.iter_mut().find(|en| en.cell == c as u32) {
            Some(en) => en.coef.iter_mut().zip(coef).for_each(|(a, b)| *a += b),
            None => entries.push(RemapEntry { cell: c as u32, coef }),
        }
    }
    entries.sort_by_key(|e| e.cell);
    (entries, above)
}

/// Largest stable explicit step: `0.8 / (Σ w_k + max|v|/dx)`; infinite when
/// both terms vanish (diffusion is implicit).
pub fn stability_limit(op: &FpeOperatorData) -> f64 {
    let vmax = op.velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rate = op.total_rate + vmax / op.spec.dx();
    if rate > 0.0 {
        0.8 / rate
    } else {
        f64::INFINITY
    }
}
