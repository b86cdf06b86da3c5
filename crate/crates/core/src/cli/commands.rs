use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::config::{DensitySource, ExportFormat, RunConfig};
use super::{io_failure, ConfigError, Failure};
use crate::exec::Execution;
use crate::fpe::{self, assemble_operator, write_snapshot_csv, DensityGrid, FpeError, GridSpec};
use crate::rng::stream;
use crate::sde::{self, empirical_density, FlagReason, PathEnsemble, Smoothing};
use crate::transform::{marcus_map_ode, TransformAtlas};
use crate::validate::{analytic_reference, compare_with, mc_band, Accounting, ComparisonReport, Verdict};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("report serialises") + "\n";
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

pub(super) fn check_simulate(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.model.build()?;
    cfg.plan()?;
    Ok(())
}

pub(super) fn check_solve(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.model.build()?;
    let (s, _, _) = cfg.solve_params()?;
    cfg.initial()?.density(s.grid)?;
    Ok(())
}

pub(super) fn check_compare(cfg: &RunConfig) -> Result<(), Failure> {
    let c = cfg.compare.as_ref().ok_or_else(|| ConfigError { field: "compare".into(), message: "missing".into() })?;
    GridSpec::new(c.grid.xmin, c.grid.xmax, c.grid.n)
        .map_err(|m| ConfigError { field: "compare.grid".into(), message: m })?;
    if !(c.time > 0.0) {
        return Err(ConfigError { field: "compare.time".into(), message: "must be positive".into() }.into());
    }
    for (side, src) in [("compare.a", &c.a), ("compare.b", &c.b)] {
        match src {
            DensitySource::MonteCarlo => check_simulate(cfg)?,
            DensitySource::FokkerPlanck => {
                check_solve(cfg)?;
                let s = cfg.solve.as_ref().expect("checked");
                if !s.grid.same_as(&c.grid) {
                    return Err(Failure::Config(format!("{side}: solve.grid must equal compare.grid")));
                }
            }
            DensitySource::Reference { .. } | DensitySource::File { .. } => {}
        }
    }
    Ok(())
}

pub(super) fn check_transform(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.model.build()?;
    let t = cfg
        .transform_check
        .as_ref()
        .ok_or_else(|| ConfigError { field: "transformCheck".into(), message: "missing".into() })?;
    if t.samples == 0 {
        return Err(Failure::Config("transformCheck.samples: must be positive".into()));
    }
    for (f, r) in [("transformCheck.xRange", t.x_range), ("transformCheck.yRange", t.y_range)] {
        if !(r.0 < r.1 && r.0.is_finite() && r.1.is_finite()) {
            return Err(Failure::Config(format!("{f}: must be a finite increasing pair")));
        }
    }
    Ok(())
}

fn flag_report(ens: &PathEnsemble) -> serde_json::Value {
    let flagged: Vec<_> = ens
        .flagged
        .iter()
        .map(|f| {
            let reason = match &f.reason {
                FlagReason::Blowup => "blowup".to_string(),
                FlagReason::Underflow => "underflow".to_string(),
                FlagReason::NonFinite => "nonFinite".to_string(),
                FlagReason::Transform(m) => format!("transform: {m}"),
            };
            json!({ "path": f.path, "time": f.time, "reason": reason })
        })
        .collect();
    json!({
        "nPaths": ens.n_paths,
        "kept": ens.kept(),
        "flaggedFraction": ens.flagged_fraction(),
        "flagged": flagged,
    })
}

pub(super) fn simulate(cfg: &RunConfig, dir: &Path, exec: Execution) -> Result<(), Failure> {
    let model = cfg.model.build()?;
    let plan = cfg.plan()?;
    let s = cfg.simulate.as_ref().expect("checked");
    let ens = sde::simulate(&model, &plan, exec).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_json(&dir.join("flagged.json"), &flag_report(&ens))?;
    if matches!(s.format, ExportFormat::Csv | ExportFormat::Both) {
        let path = dir.join("paths.csv");
        let mut w = create(&path)?;
        sde::write_csv(&ens, &mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))?;
    }
    if matches!(s.format, ExportFormat::Binary | ExportFormat::Both) {
        let path = dir.join("paths.bin");
        let mut w = create(&path)?;
        sde::write_binary(&ens, &mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))?;
    }
    let moments: Vec<_> = (0..ens.times.len())
        .map(|i| {
            let n = ens.kept() as f64;
            let mean = ens.column(i).sum::<f64>() / n;
            let var = ens.column(i).map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            json!({ "time": ens.times[i], "mean": mean, "variance": var })
        })
        .collect();
    write_json(&dir.join("summary.json"), &json!({ "kept": ens.kept(), "moments": moments }))?;
    println!("{:<18}{:>14}", "paths", ens.n_paths);
    println!("{:<18}{:>14}", "kept", ens.kept());
    println!("{:<18}{:>14.6e}", "flagged fraction", ens.flagged_fraction());
    if ens.kept() == 0 || ens.flagged_fraction() > s.max_flagged_fraction {
        return Err(Failure::Numerical(format!(
            "{} of {} paths flagged (limit {}); see flagged.json",
            ens.flagged.len(),
            ens.n_paths,
            s.max_flagged_fraction
        )));
    }
    Ok(())
}

fn fpe_failure(e: FpeError) -> Failure {
    match e {
        FpeError::InvalidInput(_) | FpeError::ZeroNotAligned { .. } | FpeError::GridTooCoarse { .. } => {
            Failure::Config(format!("solve: {e}"))
        }
        FpeError::Instability { .. } | FpeError::Transform(_) => Failure::Numerical(e.to_string()),
    }
}

fn run_solver(cfg: &RunConfig, grid: GridSpec, horizon: f64, exec: Execution) -> Result<fpe::FpeSolution, Failure> {
    let model = cfg.model.build()?;
    let (_, quad, ctl) = cfg.solve_params()?;
    let p0 = cfg.initial()?.density(grid)?;
    let op = assemble_operator(&model, grid, quad, exec).map_err(fpe_failure)?;
    fpe::solve(&op, &p0, horizon, &ctl, exec).map_err(fpe_failure)
}

pub(super) fn solve(cfg: &RunConfig, dir: &Path, exec: Execution) -> Result<(), Failure> {
    let (s, _, _) = cfg.solve_params()?;
    let sol = run_solver(cfg, s.grid, s.horizon, exec)?;
    fpe::write_solution(dir, &sol.snapshots, &sol.report, s).map_err(|e| io_failure(dir, e))?;
    let r = &sol.report;
    println!("{:<18}{:>14}", "steps", r.steps);
    println!("{:<18}{:>14.6e}", "dt", r.dt);
    println!("{:<18}{:>14.10}", "final mass", r.final_mass);
    println!("{:<18}{:>14.6e}", "leak budget", r.leak_budget);
    println!("{:<18}{:>14.6e}", "max negativity", r.max_negativity);
    Ok(())
}

struct Side {
    density: DensityGrid,
    band: f64,
    flagged: f64,
    leak: f64,
}

fn read_density_csv(path: &Path, grid: GridSpec) -> Result<DensityGrid, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut values = Vec::with_capacity(grid.n);
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || Failure::Config(format!("{}:{}: expected `x,value`", path.display(), i + 1));
        let (x, v) = line.split_once(',').ok_or_else(bad)?;
        let x: f64 = x.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        let j = values.len();
        if j >= grid.n || (x - grid.center(j)).abs() > 1e-9 * grid.dx().max(1.0) {
            return Err(Failure::Config(format!("{}: grid mismatch at line {}", path.display(), i + 1)));
        }
        values.push(v);
    }
    if values.len() != grid.n {
        return Err(Failure::Config(format!("{}: grid mismatch, {} rows for {} cells", path.display(), values.len(), grid.n)));
    }
    Ok(DensityGrid { spec: grid, values, time: 0.0 })
}

fn resolve(cfg: &RunConfig, src: &DensitySource, base: &Path, exec: Execution) -> Result<Side, Failure> {
    let c = cfg.compare.as_ref().expect("checked");
    let (grid, time) = (c.grid, c.time);
    Ok(match src {
        DensitySource::MonteCarlo => {
            let model = cfg.model.build()?;
            let mut plan = cfg.plan()?;
            plan.horizon = time;
            plan.save_times = vec![time];
            let ens = sde::simulate(&model, &plan, exec).map_err(|e| Failure::Numerical(e.to_string()))?;
            let density =
                empirical_density(&ens, 0, grid, Smoothing::None).map_err(|e| Failure::Numerical(e.to_string()))?;
            Side { band: mc_band(&density, plan.n_paths), flagged: ens.flagged_fraction(), leak: 0.0, density }
        }
        DensitySource::FokkerPlanck => {
            let mut sol = run_solver(cfg, grid, time, exec)?;
            let density = sol.snapshots.pop().expect("solver keeps the horizon");
            Side { density, band: 0.0, flagged: 0.0, leak: sol.report.leak_budget }
        }
        DensitySource::Reference { reference } => Side {
            density: analytic_reference(reference, grid, time).map_err(|e| Failure::Config(format!("compare: {e}")))?,
            band: 0.0,
            flagged: 0.0,
            leak: 0.0,
        },
        DensitySource::File { path } => {
            let p = base.join(path);
            Side { density: read_density_csv(&p, grid)?, band: 0.0, flagged: 0.0, leak: 0.0 }
        }
    })
}

/// Fixed-width summary of a comparison.
pub fn comparison_table(r: &ComparisonReport) -> String {
    let rows = [
        ("L1 distance", r.l1_distance),
        ("KS statistic", r.ks_statistic),
        ("MC std-err band", r.mc_std_err_band),
        ("MC flagged", r.mass_accounting.mc_flagged),
        ("FP leak", r.mass_accounting.fpe_leak),
        ("L1 tolerance", r.l1_tolerance),
    ];
    let mut out = format!("{:<18}{:>14}\n", "metric", "value");
    for (name, v) in rows {
        out += &format!("{name:<18}{v:>14.6e}\n");
    }
    let verdict = if r.verdict == Verdict::Pass { "pass" } else { "fail" };
    out += &format!("{:<18}{:>14}\n", "verdict", verdict);
    out
}

pub(super) fn compare(cfg: &RunConfig, dir: &Path, base: &Path, exec: Execution) -> Result<(), Failure> {
    let c = cfg.compare.as_ref().expect("checked");
    let a = resolve(cfg, &c.a, base, exec)?;
    let b = resolve(cfg, &c.b, base, exec)?;
    for (name, s) in [("a.csv", &a), ("b.csv", &b)] {
        let path = dir.join(name);
        let mut w = create(&path)?;
        write_snapshot_csv(&s.density, &mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))?;
    }
    let acct = Accounting { mc_flagged: a.flagged + b.flagged, fpe_leak: a.leak + b.leak };
    let report = compare_with(&a.density, &b.density, a.band + b.band, acct, c.l1_floor)
        .map_err(|e| Failure::Config(format!("compare: {e}")))?;
    write_json(&dir.join("report.json"), &report)?;
    print!("{}", comparison_table(&report));
    if report.verdict == Verdict::Fail {
        return Err(Failure::Tolerance(format!(
            "L1 distance {:.6e} exceeds {:.6e}",
            report.l1_distance, report.l1_tolerance
        )));
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Check {
    name: &'static str,
    max_error: f64,
    tolerance: f64,
    pass: bool,
}

pub(super) fn transform_check(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let t = cfg.transform_check.as_ref().expect("checked");
    let model = cfg.model.build()?;
    let atlas: &TransformAtlas = model.atlas();
    let num = |e: crate::transform::TransformError| Failure::Numerical(e.to_string());
    let mut rng = stream(t.seed, 0);
    let (mut chain, mut ode, mut group) = (0.0f64, 0.0f64, 0.0f64);
    let mut escapes = 0usize;
    let mut fixed_points = 0usize;
    for _ in 0..t.samples {
        let x = rng.random_range(t.x_range.0..t.x_range.1);
        let y = rng.random_range(t.y_range.0..t.y_range.1);
        let split: f64 = rng.random();
        if atlas.sigma().value(x) == 0.0 {
            fixed_points += 1;
            continue;
        }
        let v = atlas.h_tilde(x, y).map_err(num)?;
        let (i0, h0) = atlas.h_forward(x).map_err(num)?;
        let (i1, h1) = atlas.h_forward(v).map_err(num)?;
        if i0 != i1 {
            escapes += 1;
        }
        chain = chain.max((h1 - h0 - y).abs());
        let o = marcus_map_ode(atlas.sigma(), y, x).map_err(num)?;
        ode = ode.max((v - o).abs());
        let (y1, y2) = (split * y, (1.0 - split) * y);
        let w = atlas.h_tilde(atlas.h_tilde(x, y1).map_err(num)?, y2).map_err(num)?;
        group = group.max((w - v).abs() / v.abs().max(1.0));
    }
    let checks = [
        Check { name: "chain identity", max_error: chain, tolerance: t.identity_tolerance, pass: chain <= t.identity_tolerance },
        Check { name: "ODE oracle", max_error: ode, tolerance: t.ode_tolerance, pass: ode <= t.ode_tolerance },
        Check { name: "group property", max_error: group, tolerance: t.ode_tolerance, pass: group <= t.ode_tolerance },
        Check { name: "interval confinement", max_error: escapes as f64, tolerance: 0.0, pass: escapes == 0 },
    ];
    let all = checks.iter().all(|c| c.pass);
    write_json(
        &dir.join("transform_check.json"),
        &json!({ "samples": t.samples, "skippedAtZeros": fixed_points, "checks": checks, "pass": all }),
    )?;
    println!("{:<22}{:>14}{:>14}{:>8}", "check", "max error", "tolerance", "status");
    for c in &checks {
        println!(
            "{:<22}{:>14.6e}{:>14.6e}{:>8}",
            c.name,
            c.max_error,
            c.tolerance,
            if c.pass { "pass" } else { "fail" }
        );
    }
    if !all {
        return Err(Failure::Tolerance("transform identities out of tolerance".into()));
    }
    Ok(())
}
