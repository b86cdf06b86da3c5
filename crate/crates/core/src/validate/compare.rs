use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::fpe::DensityGrid;

pub const DEFAULT_L1_FLOOR: f64 = 0.03;

/// Mass that one side of a comparison is known to be missing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Accounting {
    /// Fraction of Monte Carlo paths removed by the blow-up guard.
    pub mc_flagged: f64,
    /// Leak budget of the Fokker-Planck run.
    pub fpe_leak: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub l1_distance: f64,
    pub ks_statistic: f64,
    /// Expected L1 error of a histogram from `N` samples.
    pub mc_std_err_band: f64,
    pub mass_accounting: Accounting,
    pub l1_tolerance: f64,
    pub verdict: Verdict,
}

/// L1 distance and KS statistic with a zero band and zero accounting.
pub fn compare(a: &DensityGrid, b: &DensityGrid) -> Result<ComparisonReport, ValidateError> {
    compare_with(a, b, 0.0, Accounting::default(), DEFAULT_L1_FLOOR)
}

/// Compares two densities on the same grid. The L1 tolerance is
/// `max(floor, 3·band + fpeLeak + mcFlagged)`.
pub fn compare_with(
    a: &DensityGrid,
    b: &DensityGrid,
    band: f64,
    acct: Accounting,
    floor: f64,
) -> Result<ComparisonReport, ValidateError> {
    if !a.spec.same_as(&b.spec) {
        return Err(ValidateError::GridMismatch(format!("{:?} vs {:?}", a.spec, b.spec)));
    }
    let dx = a.spec.dx();
    let mut l1 = 0.0;
    let mut ks = 0.0f64;
    let (mut ca, mut cb) = (0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        l1 += (x - y).abs() * dx;
        ca += x * dx;
        cb += y * dx;
        ks = ks.max((ca - cb).abs());
    }
    let tol = floor.max(3.0 * band + acct.fpe_leak + acct.mc_flagged);
    Ok(ComparisonReport {
        l1_distance: l1,
        ks_statistic: ks.min(1.0),
        mc_std_err_band: band,
        mass_accounting: acct,
        l1_tolerance: tol,
        verdict: if l1 <= tol { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Expected L1 error `Σ E|p̂_j − p_j| dx` of a histogram built from `n`
/// samples, estimated from the histogram itself under a normal approximation
/// of the bin counts.
pub fn mc_band(hist: &DensityGrid, n: usize) -> f64 {
    let dx = hist.spec.dx();
    let nf = n as f64;
    let s: f64 = hist
        .values
        .iter()
        .map(|v| {
            let m = (v * dx).clamp(0.0, 1.0);
            (m * (1.0 - m)).sqrt()
        })
        .sum();
    (2.0 / (std::f64::consts::PI * nf)).sqrt() * s
}
