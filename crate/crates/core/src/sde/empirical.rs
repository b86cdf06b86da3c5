use statrs::function::erf::erf;

use super::{PathEnsemble, SdeError};
use crate::fpe::{DensityGrid, GridSpec};

/// Kernel smoothing for [`empirical_density`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothing {
    None,
    /// Gaussian kernel with Silverman's rule-of-thumb bandwidth.
    Silverman,
    Bandwidth(f64),
}

/// Histogram estimate of the density at `times[time_index]`.
///
/// Normalised by the total number of simulated paths, so flagged paths and
/// states outside the grid count as missing mass.
pub fn empirical_density(
    ens: &PathEnsemble,
    time_index: usize,
    spec: GridSpec,
    smoothing: Smoothing,
) -> Result<DensityGrid, SdeError> {
    if ens.kept() == 0 {
        return Err(SdeError::EmptyEnsemble);
    }
    if time_index >= ens.times.len() {
        return Err(SdeError::InvalidPlan(format!("time index {time_index} out of range")));
    }
    let mut counts = vec![0.0f64; spec.n];
    for x in ens.column(time_index) {
        if let Some(j) = spec.cell_of(x) {
            counts[j] += 1.0;
        }
    }
    let h = match smoothing {
        Smoothing::None => 0.0,
        Smoothing::Bandwidth(h) => h,
        Smoothing::Silverman => silverman(ens.column(time_index).collect()),
    };
    if h > 0.0 {
        counts = smooth(&counts, spec.dx(), h);
    }
    let scale = 1.0 / (ens.n_paths as f64 * spec.dx());
    Ok(DensityGrid { spec, values: counts.into_iter().map(|c| c * scale).collect(), time: ens.times[time_index] })
}

fn silverman(mut xs: Vec<f64>) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| xs[((p * (n - 1.0)).round() as usize).min(xs.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Convolves bin counts with a Gaussian kernel averaged over each bin.
fn smooth(counts: &[f64], dx: f64, h: f64) -> Vec<f64> {
    let reach = ((5.0 * h / dx).ceil() as usize).max(1);
    let cdf = |x: f64| 0.5 * (1.0 + erf(x / (h * std::f64::consts::SQRT_2)));
    let weights: Vec<f64> = (0..=reach)
        .map(|k| {
            let c = k as f64 * dx;
            cdf(c + 0.5 * dx) - cdf(c - 0.5 * dx)
        })
        .collect();
    let n = counts.len();
    let mut out = vec![0.0; n];
    for (i, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(n - 1);
        for (j, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *o += c * weights[i.abs_diff(j)];
        }
    }
    out
}
