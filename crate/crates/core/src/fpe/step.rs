use serde::Serialize;

use crate::exec::{fill_indexed, Execution};

use super::{stability_limit, DensityGrid, FpeError, FpeOperatorData};

/// Mass bookkeeping of one step or a whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MassLedger {
    /// Mass that left `[xmin, xmax]` by advection, diffusion or jumps.
    pub boundary_outflow: f64,
    /// `ν(|y| > ymax)·dt·mass`: jumps the quadrature does not represent.
    pub tail_charge: f64,
}

impl MassLedger {
    pub fn leak_budget(&self) -> f64 {
        self.boundary_outflow + self.tail_charge
    }

    fn add(&mut self, o: MassLedger) {
        self.boundary_outflow += o.boundary_outflow;
        self.tail_charge += o.tail_charge;
    }
}

/// Scratch buffers reused across steps.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    cum: Vec<f64>,
    slope: Vec<f64>,
    jump_flux: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

/// One IMEX step: upwind advection and the jump remap explicitly, then the
/// diffusion implicitly.
pub fn step(
    op: &FpeOperatorData,
    p: &mut DensityGrid,
    dt: f64,
    ws: &mut Workspace,
    exec: Execution,
) -> Result<MassLedger, FpeError> {
    if !p.spec.same_as(&op.spec) {
        return Err(FpeError::InvalidInput("density grid does not match the operator grid".into()));
    }
    let n = op.spec.n;
    let dx = op.spec.dx();
    let before = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ledger = MassLedger::default();

    let mut flux = vec![0.0; n + 1];
    // Upwind advective flux at edges; nothing enters from outside.
    for (e, f) in flux.iter_mut().enumerate() {
        let v = op.velocity[e];
        *f = if v > 0.0 {
            if e == 0 { 0.0 } else { v * p.values[e - 1] }
        } else if e == n {
            0.0
        } else {
            v * p.values[e]
        };
    }
    ledger.boundary_outflow += dt * ((-flux[0]).max(0.0) + flux[n].max(0.0));

    if op.total_rate > 0.0 {
        jump_flux(op, &p.values, ws, exec);
        let d = &ws.jump_flux;
        // d holds the rate of change of the cumulative mass at each edge.
        ledger.boundary_outflow += dt * (d[0] - d[n]);
        for (f, de) in flux.iter_mut().zip(d) {
            *f -= de;
        }
        ledger.tail_charge += dt * op.tail_rate * p.mass();
    }
    for j in 0..n {
        p.values[j] -= dt * (flux[j + 1] - flux[j]) / dx;
    }

    if op.a_eff > 0.0 {
        ledger.boundary_outflow += implicit_diffusion(op, &mut p.values, dt, ws);
    }

    p.time += dt;
    let after = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !after.is_finite() || (before > 0.0 && after > 2.0 * before) {
        return Err(FpeError::Instability { time: p.time, growth: after / before });
    }
    Ok(ledger)
}

/// Rate of change of each cell value under the discrete jump operator alone
/// (the small-jump part is carried by the diffusion).
pub fn apply_jump(op: &FpeOperatorData, p: &DensityGrid, exec: Execution) -> Vec<f64> {
    let n = op.spec.n;
    if op.total_rate == 0.0 {
        return vec![0.0; n];
    }
    let mut ws = Workspace::default();
    jump_flux(op, &p.values, &mut ws, exec);
    let dx = op.spec.dx();
    (0..n).map(|j| (ws.jump_flux[j + 1] - ws.jump_flux[j]) / dx).collect()
}

/// `D_e = Σ_k w_k (P̃(H̃(x_e, −y_k)) − P_e)`, the jump-induced rate of change of
/// the cumulative mass at each edge, with `P̃` a monotone cubic Hermite
/// interpolant of the edge values `P_e`.
fn jump_flux(op: &FpeOperatorData, p: &[f64], ws: &mut Workspace, exec: Execution) {
    let n = p.len();
    let dx = op.spec.dx();
    ws.cum.resize(n + 1, 0.0);
    ws.slope.resize(n + 1, 0.0);
    ws.jump_flux.resize(n + 1, 0.0);
    ws.cum[0] = 0.0;
    for (j, v) in p.iter().enumerate() {
        ws.cum[j + 1] = ws.cum[j] + v * dx;
    }
    let total = ws.cum[n];
    for e in 0..=n {
        let left = if e > 0 { p[e - 1] } else { 0.0 };
        let right = if e < n { p[e] } else { 0.0 };
        let raw = if e >= 2 && e + 1 < n {
            (-p[e - 2] + 7.0 * p[e - 1] + 7.0 * p[e] - p[e + 1]) / 12.0
        } else {
            0.5 * (left + right)
        };
        let cap = 3.0 * left.max(0.0).min(right.max(0.0));
        ws.slope[e] = raw.clamp(0.0, cap.max(0.0));
    }
    let cum = &ws.cum;
    let slope = &ws.slope;
    fill_indexed(exec, &mut ws.jump_flux, |e, d| {
        if op.zero_edges[e] {
            *d = 0.0;
            return;
        }
        let mut s = op.above[e] * total;
        for en in &op.remap[e] {
            let c = en.cell as usize;
            s += en.coef[0] * cum[c] + en.coef[1] * slope[c] + en.coef[2] * cum[c + 1] + en.coef[3] * slope[c + 1];
        }
        *d = s - op.total_rate * cum[e];
    });
}

/// Backward Euler for `∂p/∂t = (A_eff/2) ∂x(σ ∂x(σp))`, zero density outside
/// the grid. Returns the mass that diffused out.
fn implicit_diffusion(op: &FpeOperatorData, p: &mut [f64], dt: f64, ws: &mut Workspace) -> f64 {
    let n = p.len();
    let dx = op.spec.dx();
    let s = &op.sigma_centers;
    let kappa = |e: usize| 0.5 * op.a_eff * op.sigma_edges[e] / dx;
    let r = dt / dx;
    ws.lower.resize(n, 0.0);
    ws.diag.resize(n, 0.0);
    ws.upper.resize(n, 0.0);
    for j in 0..n {
        // Flux through the left edge: κ_j (σp_j − σp_{j−1}), ghost value 0 at j = 0.
        let kl = kappa(j);
        let kr = kappa(j + 1);
        ws.diag[j] = 1.0 + r * (kl * s[j] + kr * s[j]);
        ws.lower[j] = if j > 0 { -r * kl * s[j - 1] } else { 0.0 };
        ws.upper[j] = if j + 1 < n { -r * kr * s[j + 1] } else { 0.0 };
    }
    thomas(&ws.lower, &ws.diag, &ws.upper, p, &mut ws.scratch);
    // Outflow through the two boundary edges at the new time level.
    dt * (kappa(0) * s[0] * p[0] + kappa(n) * s[n - 1] * p[n - 1])
}

/// Solves a tridiagonal system in place.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], cp: &mut Vec<f64>) {
    let n = d.len();
    cp.resize(n, 0.0);
    cp[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Time-stepping controls for [`solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepControl {
    /// Upper bound on the step; the stability limit may force smaller steps.
    pub max_dt: f64,
    /// Times at which to keep a snapshot (sorted, within `[0, horizon]`).
    pub snapshot_times: Vec<f64>,
}

/// Outcome of [`solve`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub steps: usize,
    pub dt: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub ledger: MassLedger,
    pub leak_budget: f64,
    pub max_negativity: f64,
}

#[derive(Clone, Debug)]
pub struct FpeSolution {
    pub snapshots: Vec<DensityGrid>,
    pub report: RunReport,
}

/// Integrates from `p0` to `horizon`, landing exactly on the snapshot times.
pub fn solve(
    op: &FpeOperatorData,
    p0: &DensityGrid,
    horizon: f64,
    ctl: &StepControl,
    exec: Execution,
) -> Result<FpeSolution, FpeError> {
    if !(horizon >= 0.0) || !(ctl.max_dt > 0.0) {
        return Err(FpeError::InvalidInput("horizon must be >= 0 and maxDt > 0".into()));
    }
    if ctl.snapshot_times.windows(2).any(|w| !(w[0] < w[1]))
        || ctl.snapshot_times.iter().any(|&t| t < 0.0 || t > horizon)
    {
        return Err(FpeError::InvalidInput("snapshot times must be increasing and within [0, horizon]".into()));
    }
    let dt_max = stability_limit(op).min(ctl.max_dt);
    let mut p = p0.clone();
    p.time = 0.0;
    let initial_mass = p.mass();
    let mut ws = Workspace::default();
    let mut ledger = MassLedger::default();
    let mut snapshots = Vec::new();
    let mut max_neg = p.max_negativity();
    let mut steps = 0usize;
    let mut targets: Vec<f64> = ctl.snapshot_times.clone();
    if targets.last().is_none_or(|&t| t < horizon) {
        targets.push(horizon);
    }
    let keep = |t: f64| ctl.snapshot_times.contains(&t) || ctl.snapshot_times.is_empty() && t == horizon;
    let mut t = 0.0;
    for &target in &targets {
        let span = target - t;
        if span > 0.0 {
            let m = (span / dt_max).ceil().max(1.0) as usize;
            let h = span / m as f64;
            for i in 0..m {
                ledger.add(step(op, &mut p, h, &mut ws, exec)?);
                max_neg = max_neg.max(p.max_negativity());
                steps += 1;
                p.time = if i + 1 == m { target } else { t + (i + 1) as f64 * h };
            }
        }
        t = target;
        if keep(target) {
            snapshots.push(p.clone());
        }
    }
    let report = RunReport {
        steps,
        dt: dt_max,
        initial_mass,
        final_mass: p.mass(),
        ledger,
        leak_budget: ledger.leak_budget(),
        max_negativity: max_neg,
    };
    Ok(FpeSolution { snapshots, report })
}
