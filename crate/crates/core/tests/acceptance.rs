//! Acceptance criteria, run in sequence so each timing is taken on a quiet
//! machine. Prints one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use marcus_core::exec::Execution;
use marcus_core::fpe::{
    assemble_operator, pointwise_generator, pointwise_nonlocal, solve, DensityGrid, FpeSolution, GridSpec, QuadParams,
    StepControl,
};
use marcus_core::levy::{Density1D, LevyMeasure, LevyTriplet};
use marcus_core::rng::stream;
use marcus_core::sde::{empirical_density, simulate, Drift, InitialState, PathEnsemble, SdeModel, SimulationPlan, Smoothing};
use marcus_core::transform::{marcus_map_ode, AtlasOptions, SigmaFunction, TransformAtlas};
use marcus_core::validate::{
    analytic_reference, compare, compare_with, mc_band, stable_exponent_constant, Accounting, ComparisonReport, Reference,
    Verdict, DEFAULT_L1_FLOOR,
};
use rand::Rng;

const EXEC: Execution = Execution::Parallel;

// Tolerances and budgets of the acceptance criteria.
const CHAIN_TOL: f64 = 1e-8;
const ODE_TOL: f64 = 1e-7;
const SERIES_TOL: f64 = 1e-10;
const LIMIT_TOL: f64 = 1e-6;
const LOGNORMAL_L1: f64 = 1e-2;
const ADJOINT_REL: f64 = 1e-6;
const MASS_DRIFT_PER_TIME: f64 = 1e-6;
const IDENTITY_SAMPLES: usize = 10_000;
const MC_PATHS: usize = 1_000_000;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, budget_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < budget_s, format!("{s:.1} s (budget {budget_s} s)"))
}

fn report(o: &Outcome) {
    println!("[{}] {} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
}

fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
    (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

fn linear_sigma() -> SigmaFunction {
    SigmaFunction::linear(1.0, 0.0).unwrap()
}

fn stable_model() -> SdeModel {
    SdeModel::new(
        Drift::Linear { intercept: 0.0, slope: -1.0 },
        linear_sigma(),
        LevyTriplet::new(1.0, 0.0, LevyMeasure::alpha_stable(1.5, 1.0).unwrap()).unwrap(),
    )
    .unwrap()
}

fn poisson_model() -> SdeModel {
    let mu = Density1D::normal(0.0, 0.3).unwrap();
    SdeModel::new(
        Drift::Linear { intercept: 0.0, slope: -1.0 },
        linear_sigma(),
        LevyTriplet::new(1.0, 0.5, LevyMeasure::compound_poisson(1.0, mu).unwrap()).unwrap(),
    )
    .unwrap()
}

// Criterion 1 ----------------------------------------------------------------

type Sampler = dyn Fn(&mut marcus_core::rng::RngState) -> (f64, f64);

struct IdentityStats {
    chain: f64,
    ode: f64,
    escapes: usize,
}

fn identity_suite<F: Fn(&mut marcus_core::rng::RngState) -> (f64, f64)>(atlas: &TransformAtlas, sample: F) -> IdentityStats {
    let mut rng = stream(2024, 0);
    let mut s = IdentityStats { chain: 0.0, ode: 0.0, escapes: 0 };
    for _ in 0..IDENTITY_SAMPLES {
        let (x, y) = sample(&mut rng);
        let v = atlas.h_tilde(x, y).unwrap();
        let (i0, h0) = atlas.h_forward(x).unwrap();
        let (i1, h1) = atlas.h_forward(v).unwrap();
        s.escapes += usize::from(i0 != i1);
        s.chain = s.chain.max((h1 - h0 - y).abs());
        s.ode = s.ode.max((v - marcus_map_ode(atlas.sigma(), y, x).unwrap()).abs());
    }
    s
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let uniform = |lo: f64, hi: f64| move |r: &mut marcus_core::rng::RngState| r.random_range(lo..hi);
    let ux = uniform(-5.0, 5.0);
    let uy = uniform(-3.0, 3.0);
    let box_sample = move |r: &mut marcus_core::rng::RngState| (ux(r), uy(r));
    let cases: Vec<(&str, TransformAtlas, Box<Sampler>)> = vec![
        ("x", TransformAtlas::new(linear_sigma()).unwrap(), Box::new(box_sample)),
        (
            "x (quadrature)",
            TransformAtlas::with_options(linear_sigma(), AtlasOptions { closed_form: false, ..Default::default() }).unwrap(),
            Box::new(box_sample),
        ),
        ("2x", TransformAtlas::new(SigmaFunction::linear(2.0, 0.0).unwrap()).unwrap(), Box::new(move |r| (ux(r), uy(r) / 2.0))),
        (
            "sin x",
            TransformAtlas::new(SigmaFunction::sine(1.0, 1.0, (-10.0, 10.0)).unwrap()).unwrap(),
            Box::new(move |r| (r.random_range(-6.0..6.0), uy(r))),
        ),
        (
            "1+x^2",
            TransformAtlas::new(SigmaFunction::polynomial(vec![1.0, 0.0, 1.0], vec![], (-10.0, 10.0)).unwrap()).unwrap(),
            // The flow of 1 + x² leaves every bounded set in finite time; keep H(x) + y inside (−π/2, π/2).
            Box::new(|r| {
                let x: f64 = r.random_range(-3.0..3.0);
                let t: f64 = r.random_range(-1.0..1.0);
                (x, t * (FRAC_PI_2 - 0.3) - x.atan())
            }),
        ),
        ("constant", TransformAtlas::new(SigmaFunction::constant(1.5).unwrap()).unwrap(), Box::new(box_sample)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, atlas, sample) in &cases {
        let s = identity_suite(atlas, sample);
        pass &= s.chain <= CHAIN_TOL && s.ode <= ODE_TOL && s.escapes == 0;
        parts.push(format!("{name}: chain {:.1e} ode {:.1e}", s.chain, s.ode));
    }
    let (fast, t) = within(start.elapsed(), 10.0);
    Outcome {
        id: "C1",
        title: "transform identities",
        pass: pass && fast,
        detail: format!("{}; tol {CHAIN_TOL:e}/{ODE_TOL:e}; {t}", parts.join(", ")),
    }
}

// Criterion 2 ----------------------------------------------------------------

fn criterion2() -> Outcome {
    let start = Instant::now();
    let atlas = TransformAtlas::with_options(linear_sigma(), AtlasOptions { closed_form: false, ..Default::default() }).unwrap();
    let mut series_err = 0.0f64;
    let mut limit_err = 0.0f64;
    for i in 0..=80 {
        let y = -2.0 + 4.0 * i as f64 / 80.0;
        let s = atlas.series_dx(0, y).unwrap();
        series_err = series_err.max((s - y.exp()).abs());
        for x in [1e-6, -1e-6, 1e-8, -1e-8] {
            let ratio = atlas.h_tilde(x, y).unwrap() / x;
            limit_err = limit_err.max((ratio - s).abs());
        }
    }
    let (fast, t) = within(start.elapsed(), 1.0);
    Outcome {
        id: "C2",
        title: "Phi_k series at a zero",
        pass: series_err <= SERIES_TOL && limit_err <= LIMIT_TOL && fast,
        detail: format!("|series - e^y| {series_err:.1e} (tol {SERIES_TOL:e}), two-sided limit {limit_err:.1e} (tol {LIMIT_TOL:e}); {t}"),
    }
}

// Criterion 3 ----------------------------------------------------------------

fn criterion3() -> Outcome {
    let start = Instant::now();
    let model = SdeModel::new(Drift::Zero, linear_sigma(), LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap()).unwrap();
    let spec = GridSpec::new(0.0, 8.0, 1600).unwrap();
    let op = assemble_operator(&model, spec, QuadParams::default(), EXEC).unwrap();
    let s2 = 0.01f64 * 0.01;
    let p0 = analytic_reference(&Reference::Lognormal { mu: 0.0, variance: s2 }, spec, 0.0).unwrap();
    let sol = solve(&op, &p0, 0.5, &StepControl { max_dt: 1e-3, snapshot_times: vec![] }, EXEC).unwrap();
    let exact = analytic_reference(&Reference::Lognormal { mu: 0.0, variance: s2 + 0.5 }, spec, 0.5).unwrap();
    let l1 = compare(&sol.snapshots[0], &exact).unwrap().l1_distance;
    let (fast, t) = within(start.elapsed(), 60.0);
    Outcome {
        id: "C3",
        title: "Gaussian reduction (lognormal)",
        pass: l1 < LOGNORMAL_L1 && fast,
        detail: format!("L1 {l1:.2e} (tol {LOGNORMAL_L1:e}); {t}"),
    }
}

// Criteria 4 and 5 -------------------------------------------------------------

struct CrossRun {
    ensemble: PathEnsemble,
    fp: FpeSolution,
    report: ComparisonReport,
    mc_time: f64,
    fp_time: f64,
}

fn cross_validate(model: &SdeModel, dt: f64, spec: GridSpec, max_dt: f64) -> CrossRun {
    let horizon = 0.5;
    let init = Density1D::normal(1.0, 0.02).unwrap();

    let t0 = Instant::now();
    let mut plan = SimulationPlan::new(InitialState::Density(init), horizon, dt, MC_PATHS, vec![horizon], 20240501);
    plan.epsilon = 1e-3;
    let ensemble = simulate(model, &plan, EXEC).unwrap();
    let hist = empirical_density(&ensemble, 0, spec, Smoothing::None).unwrap();
    let mc_time = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let op = assemble_operator(model, spec, QuadParams { delta: 1e-3, ..QuadParams::default() }, EXEC).unwrap();
    let p0 = DensityGrid::from_pdf(spec, 0.0, |x| normal_pdf(x, 1.0, 0.02 * 0.02));
    let fp = solve(&op, &p0, horizon, &StepControl { max_dt, snapshot_times: vec![] }, EXEC).unwrap();
    let fp_time = t1.elapsed().as_secs_f64();

    let acct = Accounting { mc_flagged: ensemble.flagged_fraction(), fpe_leak: fp.report.leak_budget };
    let report =
        compare_with(&hist, &fp.snapshots[0], mc_band(&hist, MC_PATHS), acct, DEFAULT_L1_FLOOR).unwrap();
    CrossRun { ensemble, fp, report, mc_time, fp_time }
}

fn cross_outcome(id: &'static str, title: &'static str, run: &CrossRun, exact: &DensityGrid) -> Outcome {
    let r = &run.report;
    let total = run.mc_time + run.fp_time;
    let mc_ref = compare(&empirical_density(&run.ensemble, 0, exact.spec, Smoothing::None).unwrap(), exact).unwrap();
    let fp_ref = compare(&run.fp.snapshots[0], exact).unwrap();
    Outcome {
        id,
        title,
        pass: r.verdict == Verdict::Pass && total < 600.0,
        detail: format!(
            "L1 {:.4} KS {:.4} tol {:.4} (band {:.4}, leak {:.4}, flagged {:.1e}); vs exact law: MC {:.4}, FP {:.4}; MC {:.0} s + FP {:.0} s (budget 600 s)",
            r.l1_distance,
            r.ks_statistic,
            r.l1_tolerance,
            r.mc_std_err_band,
            r.mass_accounting.fpe_leak,
            r.mass_accounting.mc_flagged,
            mc_ref.l1_distance,
            fp_ref.l1_distance,
            run.mc_time,
            run.fp_time
        ),
    }
}

fn example_spec() -> GridSpec {
    GridSpec::new(-10.0, 10.0, 800).unwrap()
}

fn criterion4() -> (Outcome, CrossRun) {
    let run = cross_validate(&stable_model(), 0.01, example_spec(), 1e-3);
    // ln X(t) − ln X(0) is symmetric stable; average the reference over the initial spread.
    let c = stable_exponent_constant(1.5, 1.0);
    let exact = DensityGrid::from_pdf(example_spec(), 0.5, |x| {
        if x <= 0.0 {
            return 0.0;
        }
        // 21-point rule over ±4 standard deviations of the start.
        (0..21)
            .map(|i| {
                let z = -4.0 + 0.4 * i as f64;
                let w = normal_pdf(z, 0.0, 1.0) * 0.4;
                let x0 = 1.0 + 0.02 * z;
                w * Reference::AlphaStableMultiplicative { alpha: 1.5, c, t: 0.5, x0 }.pdf(x)
            })
            .sum()
    });
    (cross_outcome("C4", "stable geometric model, MC vs FP", &run, &exact), run)
}

fn criterion5() -> Outcome {
    let run = cross_validate(&poisson_model(), 1e-3, example_spec(), 1e-3);
    // ln X(t) is a Poisson mixture of Gaussians around ln X(0).
    let t = 0.5f64;
    let exact = DensityGrid::from_pdf(example_spec(), t, |x| {
        if x <= 0.0 {
            return 0.0;
        }
        let mut weight = (-t).exp();
        let mut s = 0.0;
        for k in 0..30 {
            // ln(1 + 0.02 z) is close enough to Normal(0, 0.02²) for a reference.
            s += weight * normal_pdf(x.ln(), 0.0, 0.02f64.powi(2) + 0.5 * t + k as f64 * 0.09);
            weight *= t / (k + 1) as f64;
        }
        s / x
    });
    cross_outcome("C5", "jump-diffusion geometric model, MC vs FP", &run, &exact)
}

// Criterion 6 ----------------------------------------------------------------

fn criterion6() -> Outcome {
    let start = Instant::now();
    let spec = example_spec();
    let op = assemble_operator(&stable_model(), spec, QuadParams::default(), EXEC).unwrap();
    let xs = spec.centers();
    let dx = spec.dx();
    let mut rng = stream(6, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        // x⁴ keeps the contractions x e^{±y} near the fixed point resolved on the grid.
        let mut bump = || {
            let c: f64 = rng.random_range(-2.0..2.0);
            let w: f64 = rng.random_range(0.5..1.2);
            let f = move |x: f64| x.powi(4) * (-(x - c).powi(2) / (2.0 * w * w)).exp();
            let df = move |x: f64| (4.0 * x.powi(3) - x.powi(4) * (x - c) / (w * w)) * (-(x - c).powi(2) / (2.0 * w * w)).exp();
            (f, df)
        };
        let (p, dp) = bump();
        let (phi, dphi) = bump();
        let jp = pointwise_nonlocal(&op, p, |x| p(x) + x * dp(x));
        let jphi = pointwise_generator(&op, phi, dphi);
        let lhs: f64 = xs.iter().zip(&jp).map(|(&x, v)| phi(x) * v).sum::<f64>() * dx;
        let rhs: f64 = xs.iter().zip(&jphi).map(|(&x, v)| v * p(x)).sum::<f64>() * dx;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    let (fast, t) = within(start.elapsed(), 30.0);
    Outcome {
        id: "C6",
        title: "adjoint consistency",
        pass: worst <= ADJOINT_REL && fast,
        detail: format!("max relative gap {worst:.1e} over 20 pairs (tol {ADJOINT_REL:e}); {t}"),
    }
}

// Criterion 7 ----------------------------------------------------------------

fn criterion7(stable_run: &CrossRun) -> Outcome {
    let start = Instant::now();
    let spec = example_spec();
    let op = assemble_operator(&poisson_model(), spec, QuadParams::default(), EXEC).unwrap();
    let p0 = DensityGrid::from_pdf(spec, 0.0, |x| normal_pdf(x, 0.5, 0.01));
    let horizon = 0.2;
    let sol = solve(&op, &p0, horizon, &StepControl { max_dt: 1e-2, snapshot_times: vec![] }, EXEC).unwrap();
    let drift = (sol.report.final_mass - sol.report.initial_mass).abs() / horizon;

    let min_state = stable_run.ensemble.states.iter().copied().fold(f64::INFINITY, f64::min);
    let fp = &stable_run.fp;
    let negative_mass = fp.snapshots[0].mass_where(|x| x < 0.0);
    let (fast, t) = within(start.elapsed(), 60.0);
    Outcome {
        id: "C7",
        title: "mass and sign invariants",
        pass: drift <= MASS_DRIFT_PER_TIME && min_state > 0.0 && negative_mass <= fp.report.leak_budget && fast,
        detail: format!(
            "mass drift {drift:.1e}/time (tol {MASS_DRIFT_PER_TIME:e}); min MC state {min_state:.3e} over {} paths; FP mass on x<0 {negative_mass:.1e} <= leak {:.3e}; {t}",
            stable_run.ensemble.kept(),
            fp.report.leak_budget
        ),
    }
}

// Criterion 8 ----------------------------------------------------------------

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for run in fs::read_dir(dir).unwrap() {
        let run = run.unwrap().path();
        for f in fs::read_dir(&run).unwrap() {
            let f = f.unwrap().path();
            let name = format!(
                "{}/{}",
                run.file_name().unwrap().to_string_lossy(),
                f.file_name().unwrap().to_string_lossy()
            );
            out.push((name, fs::read(&f).unwrap()));
        }
    }
    out.sort();
    out
}

fn criterion8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let model1 = r#"{"drift": {"kind": "linear", "intercept": 0, "slope": -1},
        "sigma": {"kind": "linear", "slope": 1, "root": 0},
        "triplet": {"b": 1, "a": 0, "nu": {"kind": "alphaStable", "alpha": 1.5, "scale": 1}}}"#;
    let model2 = r#"{"drift": {"kind": "linear", "intercept": 0, "slope": -1},
        "sigma": {"kind": "linear", "slope": 1, "root": 0},
        "triplet": {"b": 1, "a": 0.5, "nu": {"kind": "compoundPoisson", "rate": 1,
            "jumps": {"kind": "normal", "mean": 0, "std": 0.3}}}}"#;
    let configs = [
        (
            "simulate",
            format!(
                r#"{{"model": {model1}, "initial": {{"kind": "normal", "mean": 1, "std": 0.02}},
                "simulate": {{"horizon": 0.5, "dt": 0.01, "nPaths": 2000, "saveTimes": [0.25, 0.5], "seed": 8}}}}"#
            ),
        ),
        (
            "solve",
            format!(
                r#"{{"model": {model2}, "initial": {{"kind": "normal", "mean": 1, "std": 0.05}},
                "solve": {{"grid": {{"xmin": -10, "xmax": 10, "n": 400}}, "horizon": 0.2, "snapshotTimes": [0.1, 0.2]}}}}"#
            ),
        ),
        (
            "compare",
            format!(
                r#"{{"model": {model2}, "initial": {{"kind": "normal", "mean": 1, "std": 0.05}},
                "simulate": {{"horizon": 0.2, "dt": 0.01, "nPaths": 20000, "saveTimes": [0.2], "seed": 8}},
                "solve": {{"grid": {{"xmin": -10, "xmax": 10, "n": 400}}, "horizon": 0.2}},
                "compare": {{"grid": {{"xmin": -10, "xmax": 10, "n": 400}}, "time": 0.2,
                    "a": {{"kind": "monteCarlo"}}, "b": {{"kind": "fokkerPlanck"}}}}}}"#
            ),
        ),
        (
            "transform-check",
            r#"{"model": {"sigma": {"kind": "sine", "amplitude": 1, "frequency": 1, "window": [-10, 10]},
                "triplet": {"b": 0, "a": 0, "nu": {"kind": "null"}}},
                "transformCheck": {"samples": 2000, "xRange": [-6, 6], "yRange": [-3, 3], "seed": 4}}"#
                .to_string(),
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (cmd, body) in &configs {
        let cfg = tmp.path().join(format!("{cmd}.json"));
        fs::write(&cfg, body).unwrap();
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_marcus"))
                .args([cmd.to_string(), "--config".into(), cfg.display().to_string(), "--out".into(), out.display().to_string()])
                .output()
                .unwrap()
                .status;
            pass &= status.success();
            outputs.push(files_of(&out));
        }
        let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
        pass &= same;
        notes.push(format!("{cmd}: {} files {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    Outcome { id: "C8", title: "determinism", pass, detail: notes.join(", ") }
}

#[test]
fn acceptance_criteria() {
    let mut outcomes = Vec::new();
    for f in [criterion1, criterion2, criterion3] {
        let o = f();
        report(&o);
        outcomes.push(o);
    }
    let (c4, run1) = criterion4();
    report(&c4);
    outcomes.push(c4);
    for o in [criterion5(), criterion6(), criterion7(&run1), criterion8()] {
        report(&o);
        outcomes.push(o);
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
