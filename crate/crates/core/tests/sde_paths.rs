use std::f64::consts::PI;

use marcus_core::exec::Execution;
use marcus_core::fpe::GridSpec;
use marcus_core::levy::{sample_jumps, Density1D, LevyMeasure, LevyTriplet};
use marcus_core::rng::path_streams;
use marcus_core::sde::{
    empirical_density, marcus_jump_apply, read_binary, simulate, write_binary, write_csv, Drift, InitialState, SdeError,
    SdeModel, SimulationPlan, Smoothing,
};
use marcus_core::transform::{AtlasOptions, SigmaFunction, TransformAtlas};
use marcus_core::validate::{analytic_reference, compare, Reference};

const EXEC: Execution = Execution::Parallel;

fn stable() -> LevyMeasure {
    LevyMeasure::alpha_stable(1.5, 1.0).unwrap()
}

fn stable_model() -> SdeModel {
    SdeModel::new(
        Drift::Linear { intercept: 0.0, slope: -1.0 },
        SigmaFunction::linear(1.0, 0.0).unwrap(),
        LevyTriplet::new(1.0, 0.0, stable()).unwrap(),
    )
    .unwrap()
}

fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for x in xs {
        n += 1;
        s += x;
        s2 += x * x;
    }
    let m = s / n as f64;
    (m, s2 / n as f64 - m * m, n)
}

#[test]
fn no_dynamics_keeps_the_start() {
    let model =
        SdeModel::new(Drift::Zero, SigmaFunction::constant(0.0).unwrap(), LevyTriplet::new(0.3, 1.0, stable()).unwrap())
            .unwrap();
    let plan = SimulationPlan::new(InitialState::Point(0.7), 1.0, 0.1, 500, vec![0.0, 0.5, 1.0], 3);
    let ens = simulate(&model, &plan, EXEC).unwrap();
    assert!(ens.states.iter().all(|&x| x == 0.7));
    let spec = GridSpec::new(0.0, 1.0, 10).unwrap();
    let p = empirical_density(&ens, 2, spec, Smoothing::None).unwrap();
    let j = spec.cell_of(0.7).unwrap();
    assert!((p.values[j] * spec.dx() - 1.0).abs() < 1e-12);
    assert!((p.mass() - 1.0).abs() < 1e-12);
}

#[test]
fn brownian_motion_law() {
    let model =
        SdeModel::new(Drift::Zero, SigmaFunction::constant(1.0).unwrap(), LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap())
            .unwrap();
    let n = 1_000_000;
    let plan = SimulationPlan::new(InitialState::Point(0.0), 1.0, 0.25, n, vec![1.0], 17);
    let ens = simulate(&model, &plan, EXEC).unwrap();
    let (m, v, _) = moments(ens.column(0));
    assert!(m.abs() < 3.0 / (n as f64).sqrt(), "mean {m}");
    assert!((v - 1.0).abs() < 0.02, "var {v}");
    let spec = GridSpec::new(-6.0, 6.0, 400).unwrap();
    let p = empirical_density(&ens, 0, spec, Smoothing::None).unwrap();
    let exact = analytic_reference(&Reference::Gaussian { mean: 0.0, variance: 1.0 }, spec, 1.0).unwrap();
    let l1 = compare(&p, &exact).unwrap().l1_distance;
    assert!(l1 < 0.02, "L1 {l1}");
}

#[test]
fn geometric_brownian_motion_is_lognormal() {
    // Marcus and Stratonovich agree for continuous noise: X = exp(B_t).
    let model = SdeModel::new(
        Drift::Zero,
        SigmaFunction::linear(1.0, 0.0).unwrap(),
        LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap(),
    )
    .unwrap();
    let t = 0.5;
    let plan = SimulationPlan::new(InitialState::Point(1.0), t, 2e-3, 1_000_000, vec![t], 5);
    let ens = simulate(&model, &plan, EXEC).unwrap();
    let (m, v, n) = moments(ens.column(0).map(f64::ln));
    assert!(m.abs() < 4.0 * (t / n as f64).sqrt() + 2e-3, "mean {m}");
    assert!((v - t).abs() < 0.02 * t, "var {v}");
    let spec = GridSpec::new(0.0, 8.0, 400).unwrap();
    let p = empirical_density(&ens, 0, spec, Smoothing::None).unwrap();
    let exact = analytic_reference(&Reference::Lognormal { mu: 0.0, variance: t }, spec, t).unwrap();
    let l1 = compare(&p, &exact).unwrap().l1_distance;
    assert!(l1 < 0.03, "L1 {l1}");
}

#[test]
fn jump_map_examples() {
    let model = stable_model();
    assert_eq!(marcus_jump_apply(&model, 0.0, 1.7).unwrap(), 0.0);
    assert!((marcus_jump_apply(&model, 2.0, 3f64.ln()).unwrap() - 6.0).abs() < 1e-14);
    assert_eq!(marcus_jump_apply(&model, 2.5, 0.0).unwrap(), 2.5);
}

#[test]
fn positive_paths_stay_positive() {
    let plan = SimulationPlan::new(InitialState::Point(1.0), 0.5, 0.01, 5_000, vec![0.1, 0.25, 0.5], 99);
    let ens = simulate(&stable_model(), &plan, EXEC).unwrap();
    assert!(ens.kept() > 0);
    let min = ens.states.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0, "min state {min}");
}

fn check_chain_rule(model: &SdeModel) {
    // Symmetric measure: no compensating drift, so ln X moves only by jumps.
    let horizon = 0.5;
    let plan = SimulationPlan::new(InitialState::Point(2.0), horizon, 0.05, 300, vec![horizon], 8);
    let ens = simulate(model, &plan, EXEC).unwrap();
    for (i, &id) in ens.path_ids.iter().enumerate() {
        let (mut jrng, _) = path_streams(plan.seed, id);
        let jumps = sample_jumps(&model.triplet.nu, horizon, plan.epsilon, &mut jrng).unwrap();
        let total: f64 = jumps.iter().map(|j| j.size).sum();
        let moved = (ens.state(i, 0) / 2.0).ln();
        assert!((moved - total).abs() < 1e-8, "path {id}: {moved} vs {total}");
    }
}

#[test]
fn chain_rule_along_paths() {
    // The quadrature atlas forces the generic jump-by-jump scheme.
    let triplet = LevyTriplet::new(0.0, 0.0, stable()).unwrap();
    let atlas =
        TransformAtlas::with_options(SigmaFunction::linear(1.0, 0.0).unwrap(), AtlasOptions { closed_form: false, ..Default::default() })
            .unwrap();
    check_chain_rule(&SdeModel::with_atlas(Drift::Zero, atlas, triplet));
}

#[test]
fn log_space_paths_follow_the_compound_poisson_law() {
    // σ(x) = x with closed-form jumps: ln X(t) − ln X(0) is a compound Poisson sum.
    let (rate, s2) = (2.0f64, 0.09f64);
    let nu = LevyMeasure::compound_poisson(rate, Density1D::normal(0.0, s2.sqrt()).unwrap()).unwrap();
    let model =
        SdeModel::new(Drift::Zero, SigmaFunction::linear(1.0, 0.0).unwrap(), LevyTriplet::new(0.0, 0.0, nu).unwrap()).unwrap();
    let n = 200_000;
    let plan = SimulationPlan::new(InitialState::Point(2.0), 1.0, 0.1, n, vec![0.5, 1.0], 17);
    let ens = simulate(&model, &plan, EXEC).unwrap();
    assert_eq!(ens.kept(), n);
    let first: Vec<f64> = ens.column(0).map(|x| (x / 2.0).ln()).collect();
    let total: Vec<f64> = ens.column(1).map(|x| (x / 2.0).ln()).collect();
    let (m, v, _) = moments(total.iter().copied());
    let m4 = total.iter().map(|z| z.powi(4)).sum::<f64>() / n as f64;
    let var = rate * s2;
    let m4_exact = 3.0 * var * var + rate * 3.0 * s2 * s2;
    assert!(m.abs() < 4.0 * (var / n as f64).sqrt(), "mean {m}");
    assert!((v / var - 1.0).abs() < 0.02, "variance {v} vs {var}");
    assert!((m4 / m4_exact - 1.0).abs() < 0.06, "fourth moment {m4} vs {m4_exact}");
    // Increments over disjoint intervals are independent.
    let cov = first.iter().zip(&total).map(|(a, b)| a * (b - a)).sum::<f64>() / n as f64;
    assert!(cov.abs() < 4.0 * 0.5 * var / (n as f64).sqrt(), "cov {cov}");
}

#[test]
fn halving_dt_moves_the_mean_less_than_the_standard_error() {
    let model = SdeModel::new(
        Drift::Polynomial(vec![0.0, -1.0, 0.0, -0.1]),
        SigmaFunction::linear(1.0, 0.0).unwrap(),
        LevyTriplet::new(1.0, 0.0, LevyMeasure::compound_poisson(2.0, Density1D::normal(0.0, 0.3).unwrap()).unwrap())
            .unwrap(),
    )
    .unwrap();
    let n = 100_000;
    let run = |dt: f64| {
        let plan = SimulationPlan::new(InitialState::Point(1.0), 1.0, dt, n, vec![1.0], 21);
        moments(simulate(&model, &plan, EXEC).unwrap().column(0))
    };
    let (m1, v1, _) = run(0.02);
    let (m2, _, _) = run(0.01);
    let se = (v1 / n as f64).sqrt();
    assert!((m1 - m2).abs() < se, "{m1} {m2} se {se}");
}

#[test]
fn identical_seeds_give_identical_ensembles() {
    let plan = SimulationPlan::new(InitialState::Point(1.0), 0.5, 0.01, 3000, vec![0.25, 0.5], 1234);
    let a = simulate(&stable_model(), &plan, Execution::Parallel).unwrap();
    let b = simulate(&stable_model(), &plan, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let mut other = plan.clone();
    other.seed = 1235;
    assert_ne!(a.states, simulate(&stable_model(), &other, EXEC).unwrap().states);
}

#[test]
fn initial_density_is_sampled() {
    let model =
        SdeModel::new(Drift::Zero, SigmaFunction::constant(0.0).unwrap(), LevyTriplet::new(0.0, 0.0, LevyMeasure::Null).unwrap())
            .unwrap();
    let d = Density1D::normal(1.0, 0.02).unwrap();
    let plan = SimulationPlan::new(InitialState::Density(d), 1.0, 0.5, 100_000, vec![1.0], 4);
    let (m, v, _) = moments(simulate(&model, &plan, EXEC).unwrap().column(0));
    assert!((m - 1.0).abs() < 5e-4);
    assert!((v.sqrt() - 0.02).abs() < 5e-4);
}

#[test]
fn plan_errors_name_the_field() {
    let plan = SimulationPlan::new(InitialState::Point(1.0), 1.0, 0.1, 0, vec![1.0], 0);
    match simulate(&stable_model(), &plan, EXEC) {
        Err(SdeError::InvalidPlan(m)) => assert!(m.contains("nPaths"), "{m}"),
        other => panic!("{other:?}"),
    }
    let plan = SimulationPlan::new(InitialState::Point(1.0), 1.0, 0.1, 10, vec![2.0], 0);
    assert!(matches!(simulate(&stable_model(), &plan, EXEC), Err(SdeError::InvalidPlan(_))));
}

#[test]
fn exports_round_trip() {
    let plan = SimulationPlan::new(InitialState::Point(1.0), 0.5, 0.05, 40, vec![0.0, 0.25, 0.5], 2);
    let ens = simulate(&stable_model(), &plan, EXEC).unwrap();
    let mut csv = Vec::new();
    write_csv(&ens, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("pathId,time,state"));
    assert_eq!(text.lines().count(), 1 + ens.kept() * 3);
    let mut bin = Vec::new();
    write_binary(&ens, &mut bin).unwrap();
    let back = read_binary(bin.as_slice()).unwrap();
    assert_eq!(back.times, ens.times);
    assert_eq!(back.path_ids, ens.path_ids);
    assert_eq!(back.states, ens.states);
}

#[test]
fn kernel_smoothing_keeps_mass() {
    let model =
        SdeModel::new(Drift::Zero, SigmaFunction::constant(1.0).unwrap(), LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap())
            .unwrap();
    let plan = SimulationPlan::new(InitialState::Point(0.0), 1.0, 0.5, 20_000, vec![1.0], 9);
    let ens = simulate(&model, &plan, EXEC).unwrap();
    let spec = GridSpec::new(-8.0, 8.0, 320).unwrap();
    let p = empirical_density(&ens, 0, spec, Smoothing::Silverman).unwrap();
    assert!((p.mass() - 1.0).abs() < 1e-3);
    let peak = p.values[spec.cell_of(0.01).unwrap()];
    assert!((peak - 1.0 / (2.0 * PI).sqrt()).abs() < 0.03, "peak {peak}");
}
