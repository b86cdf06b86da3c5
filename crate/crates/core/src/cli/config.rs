//! JSON run configuration.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fpe::{DensityGrid, GridSpec, QuadParams, StepControl};
use crate::levy::{Density1D, LevyMeasure, LevyTriplet};
use crate::sde::{Drift, InitialState, SdeModel, SimulationPlan, DEFAULT_BLOWUP_GUARD};
use crate::transform::SigmaFunction;
use crate::validate::Reference;

/// A semantic problem with a parsed config, tied to the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_check: Option<TransformCheckConfig>,
    /// Parent directory of the run directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "zero_drift")]
    pub drift: DriftConfig,
    pub sigma: SigmaConfig,
    pub triplet: TripletConfig,
}

fn zero_drift() -> DriftConfig {
    DriftConfig::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum DriftConfig {
    Zero,
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
    /// `Σ coeffs[j] x^j`
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum SigmaConfig {
    Constant { value: f64 },
    /// `slope · (x − root)`
    Linear { slope: f64, root: f64 },
    /// `amplitude · sin(frequency · x)`, zeros enumerated over `window`.
    Sine { amplitude: f64, frequency: f64, window: (f64, f64) },
    /// `Σ coeffs[j] x^j` with its real zeros listed explicitly.
    Polynomial { coeffs: Vec<f64>, zeros: Vec<f64>, window: (f64, f64) },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TripletConfig {
    pub b: f64,
    pub a: f64,
    pub nu: MeasureConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum MeasureConfig {
    Null,
    AlphaStable { alpha: f64, scale: f64 },
    CompoundPoisson { rate: f64, jumps: JumpDensityConfig },
    Sum { parts: Vec<MeasureConfig> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum JumpDensityConfig {
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Laplace { loc: f64, scale: f64 },
}

/// Initial law shared by the simulator and the Fokker-Planck solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum InitialConfig {
    Point { x0: f64 },
    Normal { mean: f64, std: f64 },
    /// `ln X ~ Normal(mu, sigma²)`
    Lognormal { mu: f64, sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExportFormat {
    Csv,
    Binary,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub save_times: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_guard")]
    pub blowup_guard: f64,
    /// Exit with a numerical failure when more paths than this are flagged.
    #[serde(default = "default_max_flagged")]
    pub max_flagged_fraction: f64,
    #[serde(default = "default_format")]
    pub format: ExportFormat,
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_guard() -> f64 {
    DEFAULT_BLOWUP_GUARD
}
fn default_max_flagged() -> f64 {
    0.01
}
fn default_format() -> ExportFormat {
    ExportFormat::Both
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridSpec,
    pub horizon: f64,
    #[serde(default = "default_max_dt")]
    pub max_dt: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ymax: Option<f64>,
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
}

fn default_max_dt() -> f64 {
    1e-2
}
fn default_delta() -> f64 {
    1e-3
}
fn default_n_quad() -> usize {
    64
}

/// One side of a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum DensitySource {
    /// Histogram of the `simulate` section at the comparison time.
    MonteCarlo,
    /// The `solve` section run to the comparison time.
    FokkerPlanck,
    Reference { reference: Reference },
    /// An `x,value` CSV on the comparison grid.
    File { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CompareConfig {
    pub grid: GridSpec,
    pub time: f64,
    pub a: DensitySource,
    pub b: DensitySource,
    #[serde(default = "default_floor")]
    pub l1_floor: f64,
}

fn default_floor() -> f64 {
    crate::validate::DEFAULT_L1_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransformCheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    /// Bound on `H(H̃(x,y)) − H(x) − y`.
    #[serde(default = "default_identity_tol")]
    pub identity_tolerance: f64,
    /// Bound on the distance to the ODE flow map.
    #[serde(default = "default_ode_tol")]
    pub ode_tolerance: f64,
}

fn default_samples() -> usize {
    10_000
}
fn default_identity_tol() -> f64 {
    1e-8
}
fn default_ode_tol() -> f64 {
    1e-7
}

impl RunConfig {
    /// Parses JSON; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new(&format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<SdeModel, ConfigError> {
        let drift = match &self.drift {
            DriftConfig::Zero => Drift::Zero,
            DriftConfig::Constant { value } => Drift::Constant(*value),
            DriftConfig::Linear { intercept, slope } => Drift::Linear { intercept: *intercept, slope: *slope },
            DriftConfig::Polynomial { coeffs } => Drift::Polynomial(coeffs.clone()),
        };
        let sigma = match &self.sigma {
            SigmaConfig::Constant { value } => SigmaFunction::constant(*value),
            SigmaConfig::Linear { slope, root } => SigmaFunction::linear(*slope, *root),
            SigmaConfig::Sine { amplitude, frequency, window } => SigmaFunction::sine(*amplitude, *frequency, *window),
            SigmaConfig::Polynomial { coeffs, zeros, window } => {
                SigmaFunction::polynomial(coeffs.clone(), zeros.clone(), *window)
            }
        }
        .map_err(|e| ConfigError::new("model.sigma", e.to_string()))?;
        let nu = build_measure(&self.triplet.nu, "model.triplet.nu")?;
        let triplet =
            LevyTriplet::new(self.triplet.b, self.triplet.a, nu).map_err(|e| ConfigError::new("model.triplet", e.to_string()))?;
        SdeModel::new(drift, sigma, triplet).map_err(|e| ConfigError::new("model.sigma", e.to_string()))
    }
}

fn build_measure(m: &MeasureConfig, field: &str) -> Result<LevyMeasure, ConfigError> {
    let err = |e: crate::levy::LevyError| ConfigError::new(field, e.to_string());
    Ok(match m {
        MeasureConfig::Null => LevyMeasure::Null,
        MeasureConfig::AlphaStable { alpha, scale } => LevyMeasure::alpha_stable(*alpha, *scale).map_err(err)?,
        MeasureConfig::CompoundPoisson { rate, jumps } => {
            let d = build_jump_density(jumps).map_err(|e| ConfigError::new(&format!("{field}.jumps"), e.to_string()))?;
            LevyMeasure::compound_poisson(*rate, d).map_err(err)?
        }
        MeasureConfig::Sum { parts } => LevyMeasure::sum(
            parts
                .iter()
                .enumerate()
                .map(|(i, p)| build_measure(p, &format!("{field}.parts[{i}]")))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn build_jump_density(d: &JumpDensityConfig) -> Result<Density1D, crate::levy::LevyError> {
    match *d {
        JumpDensityConfig::Normal { mean, std } => Density1D::normal(mean, std),
        JumpDensityConfig::Uniform { low, high } => Density1D::uniform(low, high),
        JumpDensityConfig::Laplace { loc, scale } => Density1D::laplace(loc, scale),
    }
}

impl InitialConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            InitialConfig::Point { x0 } if !x0.is_finite() => Err(ConfigError::new("initial.x0", "must be finite")),
            InitialConfig::Normal { std, .. } => positive("initial.std", std),
            InitialConfig::Lognormal { sigma, .. } => positive("initial.sigma", sigma),
            _ => Ok(()),
        }
    }

    pub fn state(&self) -> Result<InitialState, ConfigError> {
        self.validate()?;
        Ok(match *self {
            InitialConfig::Point { x0 } => InitialState::Point(x0),
            InitialConfig::Normal { mean, std } => {
                InitialState::Density(Density1D::normal(mean, std).map_err(|e| ConfigError::new("initial", e.to_string()))?)
            }
            InitialConfig::Lognormal { mu, sigma } => {
                let pdf = move |x: f64| Reference::Lognormal { mu, variance: sigma * sigma }.pdf(x);
                let sampler = move |rng: &mut crate::rng::RngState| {
                    let z: f64 = StandardNormal.sample(rng);
                    (mu + sigma * z).exp()
                };
                let hi = (mu + 40.0 * sigma).exp();
                InitialState::Density(
                    Density1D::custom(Arc::new(pdf), (0.0, hi), Some(Arc::new(sampler)))
                        .map_err(|e| ConfigError::new("initial", e.to_string()))?,
                )
            }
        })
    }

    /// Cell averages on `spec`. A point start has no density.
    pub fn density(&self, spec: GridSpec) -> Result<DensityGrid, ConfigError> {
        self.validate()?;
        match *self {
            InitialConfig::Point { .. } => Err(ConfigError::new(
                "initial",
                "the Fokker-Planck solver needs a density; use a narrow normal or lognormal start",
            )),
            InitialConfig::Normal { mean, std } => {
                Ok(DensityGrid::from_pdf(spec, 0.0, |x| Reference::Gaussian { mean, variance: std * std }.pdf(x)))
            }
            InitialConfig::Lognormal { mu, sigma } => {
                Ok(DensityGrid::from_pdf(spec, 0.0, |x| Reference::Lognormal { mu, variance: sigma * sigma }.pdf(x)))
            }
        }
    }
}

impl RunConfig {
    pub fn initial(&self) -> Result<&InitialConfig, ConfigError> {
        self.initial.as_ref().ok_or_else(|| ConfigError::new("initial", "missing"))
    }

    pub fn plan(&self) -> Result<SimulationPlan, ConfigError> {
        let s = self.simulate.as_ref().ok_or_else(|| ConfigError::new("simulate", "missing"))?;
        if s.n_paths == 0 {
            return Err(ConfigError::new("simulate.nPaths", "must be positive"));
        }
        positive("simulate.horizon", s.horizon)?;
        positive("simulate.dt", s.dt)?;
        if !(0.0..=1.0).contains(&s.max_flagged_fraction) {
            return Err(ConfigError::new("simulate.maxFlaggedFraction", "must lie in [0, 1]"));
        }
        let mut plan =
            SimulationPlan::new(self.initial()?.state()?, s.horizon, s.dt, s.n_paths, s.save_times.clone(), s.seed);
        plan.epsilon = s.epsilon;
        plan.blowup_guard = s.blowup_guard;
        plan.validate().map_err(|e| ConfigError::new("simulate", e.to_string()))?;
        Ok(plan)
    }

    pub fn solve_params(&self) -> Result<(&SolveConfig, QuadParams, StepControl), ConfigError> {
        let s = self.solve.as_ref().ok_or_else(|| ConfigError::new("solve", "missing"))?;
        GridSpec::new(s.grid.xmin, s.grid.xmax, s.grid.n).map_err(|m| ConfigError::new("solve.grid", m))?;
        if !(s.horizon >= 0.0 && s.horizon.is_finite()) {
            return Err(ConfigError::new("solve.horizon", "must be finite and nonnegative"));
        }
        positive("solve.maxDt", s.max_dt)?;
        positive("solve.delta", s.delta)?;
        if s.n_quad == 0 {
            return Err(ConfigError::new("solve.nQuad", "must be positive"));
        }
        if let Some(y) = s.ymax {
            positive("solve.ymax", y)?;
        }
        let quad = QuadParams { delta: s.delta, ymax: s.ymax, n_quad: s.n_quad, ..QuadParams::default() };
        let ctl = StepControl { max_dt: s.max_dt, snapshot_times: s.snapshot_times.clone() };
        Ok((s, quad, ctl))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STABLE_RUN: &str = r#"{
        "model": {
            "drift": {"kind": "linear", "intercept": 0, "slope": -1},
            "sigma": {"kind": "linear", "slope": 1, "root": 0},
            "triplet": {"b": 1, "a": 0, "nu": {"kind": "alphaStable", "alpha": 1.5, "scale": 1}}
        },
        "initial": {"kind": "point", "x0": 1},
        "simulate": {"horizon": 0.5, "dt": 0.01, "nPaths": 10, "saveTimes": [0.5], "seed": 1}
    }"#;

    #[test]
    fn round_trip() {
        let c = RunConfig::parse(STABLE_RUN).unwrap();
        let again = RunConfig::parse(&c.canonical_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical_json(), again.canonical_json());
        c.model.build().unwrap();
        assert_eq!(c.plan().unwrap().n_paths, 10);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = RunConfig::parse("{\n  \"model\": ,\n}").unwrap_err();
        assert!(e.field.starts_with("line 2"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = STABLE_RUN.replace("\"seed\": 1", "\"seed\": 1, \"sede\": 2");
        let e = RunConfig::parse(&text).unwrap_err();
        assert!(e.message.contains("sede"), "{e}");
    }

    #[test]
    fn zero_paths_names_the_field() {
        let c = RunConfig::parse(&STABLE_RUN.replace("\"nPaths\": 10", "\"nPaths\": 0")).unwrap();
        assert_eq!(c.plan().unwrap_err().field, "simulate.nPaths");
    }

    #[test]
    fn point_start_has_no_density() {
        let c = RunConfig::parse(STABLE_RUN).unwrap();
        let spec = GridSpec::new(0.0, 1.0, 4).unwrap();
        assert_eq!(c.initial().unwrap().density(spec).unwrap_err().field, "initial");
    }
}
