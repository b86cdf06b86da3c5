use super::{LevyError, LevyMeasure};
use crate::quadrature::composite_gauss_legendre;

const POINTS_PER_PANEL: usize = 4;

/// Nodes `y_k` and weights `w_k` with `Σ w_k g(y_k) ≈ ∫_{δ≤|y|≤ymax} g dν`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * g(y)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn extend(&mut self, other: QuadratureRule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

/// Discretises `ν` on `delta ≤ |y| ≤ ymax` with roughly `n` nodes per side.
///
/// Stable measures use Gauss-Legendre panels in `log|y|`, which grades the
/// nodes geometrically towards `±delta`. Compound-Poisson measures use equal
/// panels in `y` clipped to the support of the jump density. When a side's
/// range is the mirror image of the other, the negative nodes are exact
/// mirrors so odd integrands cancel.
pub fn measure_quadrature(nu: &LevyMeasure, delta: f64, ymax: f64, n: usize) -> Result<QuadratureRule, LevyError> {
    if !(delta > 0.0) || !(delta < ymax) {
        return Err(LevyError::InvalidParameter(format!(
            "quadrature band needs 0 < delta < ymax, got delta={delta}, ymax={ymax}"
        )));
    }
    if n == 0 {
        return Err(LevyError::InvalidParameter("quadrature needs at least one node".into()));
    }
    let panels = n.div_ceil(POINTS_PER_PANEL).max(1);
    let mut rule = QuadratureRule::default();
    build(nu, delta, ymax, panels, &mut rule);
    Ok(rule)
}

fn build(nu: &LevyMeasure, delta: f64, ymax: f64, panels: usize, rule: &mut QuadratureRule) {
    match nu {
        LevyMeasure::Null => {}
        LevyMeasure::AlphaStable { alpha, scale } => {
            let (s, w) = composite_gauss_legendre(delta.ln(), ymax.ln(), panels, POINTS_PER_PANEL);
            let mut pos = QuadratureRule::default();
            for (s, w) in s.into_iter().zip(w) {
                // ν(dy) = scale·y^{-1-α} dy = scale·e^{-α s} ds for y = e^s.
                pos.nodes.push(s.exp());
                pos.weights.push(scale * (-alpha * s).exp() * w);
            }
            mirror_into(pos, rule);
        }
        LevyMeasure::CompoundPoisson { rate, jumps } => {
            let (lo, hi) = jumps.support();
            let pos_range = (delta.max(lo), ymax.min(hi));
            let neg_range = (delta.max(-hi), ymax.min(-lo));
            let side = |a: f64, b: f64, sign: f64| {
                let mut r = QuadratureRule::default();
                if b > a {
                    let (y, w) = composite_gauss_legendre(a, b, panels, POINTS_PER_PANEL);
                    for (y, w) in y.into_iter().zip(w) {
                        let y = sign * y;
                        r.nodes.push(y);
                        r.weights.push(rate * jumps.pdf(y) * w);
                    }
                }
                r
            };
            let pos = side(pos_range.0, pos_range.1, 1.0);
            if pos_range == neg_range && jumps.is_symmetric() {
                mirror_into(pos, rule);
            } else {
                let neg = side(neg_range.0, neg_range.1, -1.0);
                rule.extend(neg);
                rule.extend(pos);
            }
        }
        LevyMeasure::Sum(parts) => {
            for p in parts {
                build(p, delta, ymax, panels, rule);
            }
        }
    }
}

fn mirror_into(pos: QuadratureRule, rule: &mut QuadratureRule) {
    for (y, w) in pos.nodes.iter().zip(&pos.weights).rev() {
        rule.nodes.push(-y);
        rule.weights.push(*w);
    }
    rule.extend(pos);
}
