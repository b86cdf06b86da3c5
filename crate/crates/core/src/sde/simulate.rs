use crate::exec::{map_indices, Execution};
use crate::levy::{small_jump_compensation, JumpSampler, SignPool};
use crate::rng::{path_streams, RngState};
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{Drift, InitialState, SdeError, SdeModel};
use crate::transform::TransformAtlas;

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e12;
const BLOCK: usize = 1024;

/// What to simulate.
#[derive(Clone, Debug)]
pub struct SimulationPlan {
    pub x0: InitialState,
    pub horizon: f64,
    pub dt: f64,
    /// Jumps with `|y| ≤ epsilon` are replaced by their compensating drift.
    pub epsilon: f64,
    pub n_paths: usize,
    pub save_times: Vec<f64>,
    pub seed: u64,
    pub blowup_guard: f64,
}

impl SimulationPlan {
    pub fn new(x0: InitialState, horizon: f64, dt: f64, n_paths: usize, save_times: Vec<f64>, seed: u64) -> Self {
        Self { x0, horizon, dt, epsilon: 1e-3, n_paths, save_times, seed, blowup_guard: DEFAULT_BLOWUP_GUARD }
    }

    pub fn validate(&self) -> Result<(), SdeError> {
        let bad = |m: String| Err(SdeError::InvalidPlan(m));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.n_paths == 0 {
            return bad("nPaths must be positive".into());
        }
        if self.save_times.is_empty() {
            return bad("saveTimes must not be empty".into());
        }
        if self.save_times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("saveTimes must be strictly increasing".into());
        }
        if self.save_times.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            return bad("saveTimes must lie in [0, horizon]".into());
        }
        if !(self.blowup_guard > 0.0) {
            return bad("blowup guard must be positive".into());
        }
        if let InitialState::Point(x) = self.x0 {
            if !x.is_finite() {
                return bad(format!("x0 must be finite, got {x}"));
            }
        }
        Ok(())
    }

    /// Euler mesh merged with the save times: `(time, save slot)`.
    fn mesh(&self) -> Vec<(f64, Option<usize>)> {
        let steps = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut out: Vec<(f64, Option<usize>)> =
            (1..=steps).map(|k| ((k as f64 * self.dt).min(self.horizon), None)).collect();
        for (i, &t) in self.save_times.iter().enumerate() {
            out.push((t, Some(i)));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
        // Drop grid points that coincide with a save time.
        let tol = 1e-12 * self.horizon;
        let mut merged: Vec<(f64, Option<usize>)> = Vec::with_capacity(out.len());
        for p in out {
            match merged.last_mut() {
                Some(last) if (p.0 - last.0).abs() <= tol => {
                    if last.1.is_none() {
                        last.1 = p.1;
                    }
                }
                _ => merged.push(p),
            }
        }
        merged
    }
}

/// Why a path was removed from an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub enum FlagReason {
    Blowup,
    /// A jump carried the state onto a zero of σ, which the exact map never
    /// reaches; the true state is too close to the zero to represent.
    Underflow,
    NonFinite,
    Transform(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedPath {
    pub path: u64,
    pub time: f64,
    pub reason: FlagReason,
}

/// Simulated states of the surviving paths at the save times.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub path_ids: Vec<u64>,
    /// Row-major `path_ids.len() × times.len()`.
    pub states: Vec<f64>,
    pub flagged: Vec<FlaggedPath>,
    pub n_paths: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl PathEnsemble {
    pub fn kept(&self) -> usize {
        self.path_ids.len()
    }

    pub fn state(&self, path: usize, time_index: usize) -> f64 {
        self.states[path * self.times.len() + time_index]
    }

    pub fn column(&self, time_index: usize) -> impl Iterator<Item = f64> + '_ {
        let nt = self.times.len();
        self.states.iter().skip(time_index).step_by(nt).copied()
    }

    /// Fraction of paths removed by the overflow and underflow guards.
    pub fn flagged_fraction(&self) -> f64 {
        self.flagged.len() as f64 / self.n_paths as f64
    }
}

struct Stepper<'a> {
    model: &'a SdeModel,
    sampler: JumpSampler,
    /// `b + c_ε`: the triplet drift plus the drift owed for dropped small jumps.
    beta: f64,
    sqrt_a: f64,
    guard: f64,
    /// `(c0, c1, slope, root)` when the continuous drift is `c0 + c1·x`, there
    /// is no Brownian part and σ is linear with its exact jump map.
    affine: Option<(f64, f64, f64, f64)>,
    /// Law of the number of jumps in each interval ending at a save time.
    interval_counts: Vec<Option<Poisson<f64>>>,
}

impl Stepper<'_> {
    #[inline]
    fn drift(&self, x: f64) -> f64 {
        let s = self.model.sigma();
        let sv = s.value(x);
        let half_a = 0.5 * self.sqrt_a * self.sqrt_a;
        self.model.drift.eval(x) + self.beta * sv + if half_a != 0.0 { half_a * sv * s.derivative1(x) } else { 0.0 }
    }

    #[inline]
    fn euler(&self, x: f64, h: f64, rng: &mut RngState) -> f64 {
        if h <= 0.0 {
            return x;
        }
        let mut nx = x + self.drift(x) * h;
        if self.sqrt_a != 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            nx += self.model.sigma().value(x) * self.sqrt_a * h.sqrt() * z;
        }
        nx
    }

    fn check(&self, x: f64) -> Option<FlagReason> {
        if !x.is_finite() {
            Some(FlagReason::NonFinite)
        } else if x.abs() > self.guard {
            Some(FlagReason::Blowup)
        } else {
            None
        }
    }

    /// Same scheme as [`Stepper::path`] with the affine model inlined.
    fn path_affine(
        &self,
        plan: &SimulationPlan,
        mesh: &[(f64, Option<usize>)],
        id: u64,
        out: &mut [f64],
        (c0, c1, slope, root): (f64, f64, f64, f64),
    ) -> Result<(), FlaggedPath> {
        let (mut jrng, mut drng) = path_streams(plan.seed, id);
        let mut x = match &plan.x0 {
            InitialState::Point(x) => *x,
            InitialState::Density(d) => d.sample(&mut drng),
        };
        let mut signs = SignPool::default();
        let mut t = 0.0;
        let mut next_jump = self.sampler.next_gap(&mut jrng);
        if plan.save_times[0] == 0.0 {
            out[0] = x;
        }
        for &(target, slot) in mesh {
            while next_jump <= target {
                x += (c0 + c1 * x) * (next_jump - t);
                t = next_jump;
                let y = self.sampler.next_size(&mut jrng, &mut signs);
                let before = x;
                x = TransformAtlas::linear_jump(slope, root, x, y);
                if x == root && before != root {
                    return Err(FlaggedPath { path: id, time: t, reason: FlagReason::Underflow });
                }
                if !(x.abs() <= self.guard) {
                    return Err(FlaggedPath { path: id, time: t, reason: self.check(x).unwrap_or(FlagReason::NonFinite) });
                }
                next_jump += self.sampler.next_gap(&mut jrng);
            }
            x += (c0 + c1 * x) * (target - t);
            t = target;
            if let Some(r) = self.check(x) {
                return Err(FlaggedPath { path: id, time: t, reason: r });
            }
            if let Some(i) = slot {
                out[i] = x;
            }
        }
        Ok(())
    }

    /// The affine scheme when the drift vanishes and σ(x) = slope·x: jumps
    /// only rescale the state, so `ln|x|` accumulates `slope·y` exactly. Jump
    /// times do not matter, only how many jumps fall between save times.
    fn path_log(&self, plan: &SimulationPlan, id: u64, out: &mut [f64], slope: f64) -> Result<(), FlaggedPath> {
        let (mut jrng, mut drng) = path_streams(plan.seed, id);
        let x0 = match &plan.x0 {
            InitialState::Point(x) => *x,
            InitialState::Density(d) => d.sample(&mut drng),
        };
        if let Some(r) = self.check(x0) {
            return Err(FlaggedPath { path: id, time: 0.0, reason: r });
        }
        if x0 == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let sign = x0.signum();
        let mut l = x0.abs().ln();
        let ceiling = self.guard.ln();
        let mut signs = SignPool::default();
        let mut jumped = false;
        for ((o, &t), counts) in out.iter_mut().zip(&plan.save_times).zip(&self.interval_counts) {
            let n = counts.as_ref().map_or(0, |d| d.sample(&mut jrng) as u64);
            jumped |= n > 0;
            for _ in 0..n {
                l += slope * self.sampler.next_size(&mut jrng, &mut signs);
                if l > ceiling {
                    return Err(FlaggedPath { path: id, time: t, reason: FlagReason::Blowup });
                }
            }
            let x = if jumped { sign * l.exp() } else { x0 };
            if x == 0.0 {
                return Err(FlaggedPath { path: id, time: t, reason: FlagReason::Underflow });
            }
            *o = x;
        }
        Ok(())
    }

    fn path(
        &self,
        plan: &SimulationPlan,
        mesh: &[(f64, Option<usize>)],
        id: u64,
        out: &mut [f64],
    ) -> Result<(), FlaggedPath> {
        if let Some(aff) = self.affine {
            return match aff {
                (0.0, 0.0, slope, 0.0) => self.path_log(plan, id, out, slope),
                _ => self.path_affine(plan, mesh, id, out, aff),
            };
        }
        let (mut jrng, mut drng) = path_streams(plan.seed, id);
        let flag = |time: f64, reason: FlagReason| FlaggedPath { path: id, time, reason };
        let mut x = match &plan.x0 {
            InitialState::Point(x) => *x,
            InitialState::Density(d) => d.sample(&mut drng),
        };
        let mut signs = SignPool::default();
        let mut t = 0.0;
        let mut next_jump = self.sampler.next_gap(&mut jrng);
        if plan.save_times[0] == 0.0 {
            out[0] = x;
        }
        for &(target, slot) in mesh {
            while next_jump <= target {
                x = self.euler(x, next_jump - t, &mut drng);
                t = next_jump;
                let y = self.sampler.next_size(&mut jrng, &mut signs);
                let before = x;
                x = self
                    .model
                    .atlas()
                    .h_tilde(x, y)
                    .map_err(|e| flag(t, FlagReason::Transform(e.to_string())))?;
                let sigma = self.model.sigma();
                if sigma.is_zero(x) && !sigma.is_zero(before) {
                    return Err(flag(t, FlagReason::Underflow));
                }
                if let Some(r) = self.check(x) {
                    return Err(flag(t, r));
                }
                next_jump += self.sampler.next_gap(&mut jrng);
            }
            x = self.euler(x, target - t, &mut drng);
            t = target;
            if let Some(r) = self.check(x) {
                return Err(flag(t, r));
            }
            if let Some(i) = slot {
                out[i] = x;
            }
        }
        Ok(())
    }
}

/// Jump-adapted Euler simulation of `n_paths` independent paths.
///
/// Jumps with `|y| > ε` are applied exactly through the Marcus map at their
/// sampled times; between them the continuous part takes Euler-Maruyama
/// steps on the merged mesh of `dt` multiples and save times.
pub fn simulate(model: &SdeModel, plan: &SimulationPlan, exec: Execution) -> Result<PathEnsemble, SdeError> {
    plan.validate()?;
    let nu = &model.triplet.nu;
    let sampler = JumpSampler::new(nu, plan.epsilon)?;
    let comp = small_jump_compensation(nu, plan.epsilon)?;
    let beta = model.triplet.b - comp;
    let affine = match (model.atlas().linear_closed_form(), &model.drift) {
        (Some((slope, root)), drift) if model.triplet.a == 0.0 => {
            let (f0, f1) = match drift {
                Drift::Zero => Some((0.0, 0.0)),
                Drift::Constant(c) => Some((*c, 0.0)),
                Drift::Linear { intercept, slope } => Some((*intercept, *slope)),
                _ => None,
            }
            .unzip();
            f0.zip(f1).map(|(f0, f1)| (f0 - beta * slope * root, f1 + beta * slope, slope, root))
        }
        _ => None,
    };
    let mut interval_counts = Vec::with_capacity(plan.save_times.len());
    let mut prev = 0.0;
    for &t in &plan.save_times {
        let mean = sampler.rate() * (t - prev);
        interval_counts.push(if mean > 0.0 { Some(Poisson::new(mean).map_err(|e| SdeError::InvalidPlan(e.to_string()))?) } else { None });
        prev = t;
    }
    let stepper =
        Stepper { model, sampler, beta, sqrt_a: model.triplet.a.sqrt(), guard: plan.blowup_guard, affine, interval_counts };
    let mesh = plan.mesh();
    let nt = plan.save_times.len();
    let blocks = plan.n_paths.div_ceil(BLOCK);
    let results = map_indices(exec, blocks, |b| {
        let start = b * BLOCK;
        let end = (start + BLOCK).min(plan.n_paths);
        let mut ids = Vec::with_capacity(end - start);
        let mut states = Vec::with_capacity((end - start) * nt);
        let mut flagged = Vec::new();
        let mut buf = vec![0.0; nt];
        for id in start as u64..end as u64 {
            match stepper.path(plan, &mesh, id, &mut buf) {
                Ok(()) => {
                    ids.push(id);
                    states.extend_from_slice(&buf);
                }
                Err(f) => flagged.push(f),
            }
        }
        (ids, states, flagged)
    });
    let mut ens = PathEnsemble {
        times: plan.save_times.clone(),
        path_ids: Vec::with_capacity(plan.n_paths),
        states: Vec::with_capacity(plan.n_paths * nt),
        flagged: Vec::new(),
        n_paths: plan.n_paths,
        seed: plan.seed,
        epsilon: plan.epsilon,
    };
    for (ids, states, flagged) in results {
        ens.path_ids.extend(ids);
        ens.states.extend(states);
        ens.flagged.extend(flagged);
    }
    Ok(ens)
}
