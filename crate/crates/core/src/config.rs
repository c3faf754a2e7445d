//! TOML run configuration: parsing, defaults, and resolution into a
//! validated problem description plus solver/check settings.
//!
//! Unknown keys are rejected. A missing blow-up exponent q defaults to
//! ceil(max(n/(2m), (n-2)/m)) with a notice. Flux profiles may reference the
//! continuation level alpha = 2m(q + 4/delta1^2) symbolically (`kind =
//! "alpha"`), which resolves after q and delta1 are known.

use crate::continuation::ContinuationOptions;
use crate::error::ModelError;
use crate::model::{
    alpha_flux, validate_spec, EnvelopeChoice, FluxProfile, FluxSchedule, Hole, InitialData,
    ProblemSpec, ScalingMode, ValidatedSpec,
};
use crate::stepping::StepperConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Constraint(#[from] ModelError),
}

/// Flux profile as written in the config; `alpha` forms resolve against the
/// model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxSpec {
    Constant { value: f64 },
    /// The continuation level: g = alpha.
    Alpha,
    /// g(t) = alpha (1+t)^(-exponent).
    AlphaDecay { exponent: f64 },
    PowerDecay { amplitude: f64, exponent: f64 },
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl FluxSpec {
    fn resolve(&self, alpha: f64) -> FluxProfile {
        match self {
            FluxSpec::Constant { value } => FluxProfile::Constant { value: *value },
            FluxSpec::Alpha => FluxProfile::Constant { value: alpha },
            FluxSpec::AlphaDecay { exponent } => FluxProfile::PowerDecay {
                amplitude: alpha,
                exponent: *exponent,
            },
            FluxSpec::PowerDecay { amplitude, exponent } => FluxProfile::PowerDecay {
                amplitude: *amplitude,
                exponent: *exponent,
            },
            FluxSpec::PiecewiseConstant { breakpoints, values } => {
                FluxProfile::PiecewiseConstant {
                    breakpoints: breakpoints.clone(),
                    values: values.clone(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSection {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Constant { value: f64 },
    CosineBump { base: f64, amplitude: f64 },
    Singular {
        c1: f64,
        c2: f64,
        #[serde(default = "default_envelope")]
        envelope: EnvelopeChoice,
    },
}

fn default_envelope() -> EnvelopeChoice {
    EnvelopeChoice::GeometricMean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMode,
    pub outer: FluxSpec,
    pub holes: Vec<FluxSpec>,
}

fn default_scaling() -> ScalingMode {
    ScalingMode::PaperScaled
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: u32,
    pub m: f64,
    /// Defaults to ceil(max(n/(2m), (n-2)/m)) when omitted.
    pub q: Option<f64>,
    pub p: f64,
    pub outer_radius: f64,
    pub delta1: f64,
    pub holes: Vec<HoleSection>,
    pub initial: InitialSection,
    pub flux: FluxSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingKind {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub cells: usize,
    pub grading: GradingKind,
    pub ratio: f64,
    /// Cell size for planar runs.
    pub h: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            cells: 400,
            grading: GradingKind::Geometric,
            ratio: 1.05,
            h: None,
        }
    }
}

impl GridSection {
    pub fn grading(&self) -> crate::radial::Grading {
        match self.grading {
            GradingKind::Uniform => crate::radial::Grading::Uniform,
            GradingKind::Geometric => crate::radial::Grading::Geometric { ratio: self.ratio },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordPolicy {
    /// Persist snapshots at the sync times only (default).
    Sync,
    /// Persist every accepted step.
    All,
    /// Persist t = 0 and the final state.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Radial,
    Planar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub sync_dt: f64,
    pub record: RecordPolicy,
    pub mode: RunMode,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_end: 1.0,
            sync_dt: 0.05,
            record: RecordPolicy::Sync,
            mode: RunMode::Radial,
            seed: 0,
        }
    }
}

/// One verification request, with its pinned tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    MassBalance {
        #[serde(default = "tol_mass")]
        tol: f64,
    },
    L1Contraction {
        #[serde(default = "tol_mass")]
        tol: f64,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_pair_dt")]
        dt: f64,
        #[serde(default = "default_pair_t_end")]
        t_end: f64,
        #[serde(default = "default_pair_cells")]
        cells: usize,
    },
    AronsonBenilan {
        #[serde(default = "tol_ab")]
        tol: f64,
        #[serde(default = "default_t_min")]
        t_min: f64,
    },
    BarrierSandwich {
        #[serde(default = "tol_lower")]
        tol_lower: f64,
        #[serde(default = "tol_mass")]
        tol_upper: f64,
        /// Multiplies the closed-form A1; values below 1 are deliberate
        /// violations the check must flag.
        #[serde(default = "one")]
        a1_factor: f64,
    },
    Positivity {
        #[serde(default = "default_t_min")]
        t_min: f64,
    },
    GlobalBound {
        #[serde(default = "tol_mass")]
        tol: f64,
        delta2: f64,
        /// Multiplies the closed-form A2 (0 is the deliberate violation).
        #[serde(default = "one")]
        a2_factor: f64,
    },
    ClampInsensitivity {
        #[serde(default = "tol_mass")]
        tol: f64,
        window_a: [f64; 2],
        window_b: [f64; 2],
    },
}

fn tol_mass() -> f64 {
    1e-8
}
fn tol_ab() -> f64 {
    1e-6
}
fn tol_lower() -> f64 {
    1e-10
}
fn one() -> f64 {
    1.0
}
fn default_t_min() -> f64 {
    0.1
}
fn default_pairs() -> usize {
    100
}
fn default_pair_dt() -> f64 {
    1.0 / 128.0
}
fn default_pair_t_end() -> f64 {
    0.5
}
fn default_pair_cells() -> usize {
    96
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSection {
    pub j_max: usize,
    pub ratio: f64,
    pub options: ContinuationOptions,
    /// Acceptance thresholds for the derived checks.
    pub cauchy_factor: f64,
    pub qhat_band: f64,
    pub qhat_t_lo: f64,
    pub qhat_t_hi: f64,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        ContinuationSection {
            j_max: 4,
            ratio: 0.5,
            options: ContinuationOptions::default(),
            cauchy_factor: 1.5,
            qhat_band: 0.05,
            qhat_t_lo: 0.25,
            qhat_t_hi: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSection {
    pub radii: Vec<f64>,
    pub compare: [f64; 2],
    pub options: ContinuationOptions,
}

impl Default for ExpansionSection {
    fn default() -> Self {
        ExpansionSection {
            radii: vec![2.0, 4.0, 8.0],
            compare: [0.2, 1.5],
            options: ContinuationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Vec<SweepParam>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { plots: true }
    }
}

/// Raw configuration file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub continuation: Option<ContinuationSection>,
    #[serde(default)]
    pub expansion: Option<ExpansionSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Fully resolved configuration: the validated spec plus run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: RunConfigFile,
    pub spec: ValidatedSpec,
    /// Human-readable notes emitted during resolution (defaulted q etc.).
    pub notices: Vec<String>,
}

/// Resolve and validate a raw configuration.
pub fn resolve(mut file: RunConfigFile) -> Result<RunConfig, ConfigError> {
    let mut notices = Vec::new();
    let ms = &mut file.model;
    let q = match ms.q {
        Some(q) => q,
        None => {
            let nf = ms.n as f64;
            let q_min = (nf / (2.0 * ms.m)).max((nf - 2.0) / ms.m);
            let q = q_min.ceil();
            notices.push(format!(
                "q omitted: defaulting to ceil(max(n/(2m),(n-2)/m)) = {q}"
            ));
            ms.q = Some(q);
            q
        }
    };
    let alpha = alpha_flux(ms.m, q, ms.delta1);
    let initial_data = match &ms.initial {
        InitialSection::Constant { value } => InitialData::Constant { value: *value },
        InitialSection::CosineBump { base, amplitude } => InitialData::CosineBump {
            base: *base,
            amplitude: *amplitude,
        },
        InitialSection::Singular { c1, c2, envelope } => InitialData::Singular {
            c1: *c1,
            c2: *c2,
            envelope: *envelope,
        },
    };
    let schedule = FluxSchedule {
        outer: ms.flux.outer.resolve(alpha),
        holes: ms.flux.holes.iter().map(|f| f.resolve(alpha)).collect(),
        scaling: ms.flux.scaling,
    };
    let spec = validate_spec(ProblemSpec {
        n: ms.n,
        m: ms.m,
        q,
        p: ms.p,
        outer_radius: ms.outer_radius,
        holes: ms
            .holes
            .iter()
            .map(|h| Hole { center: h.center.clone(), radius: h.radius })
            .collect(),
        delta1: ms.delta1,
        initial_data,
        schedule,
    })?;
    file.stepper.validate()?;
    if file.run.mode == RunMode::Planar && file.grid.h.is_none() {
        return Err(ModelError::constraint("planar runs need grid.h", 0.0, 1.0).into());
    }
    Ok(RunConfig { file, spec, notices })
}

/// Parse a TOML configuration file and resolve it.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let file: RunConfigFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    resolve(file)
}

/// Apply one sweep/CLI override to the raw file (before resolution).
pub fn apply_param(file: &mut RunConfigFile, param: &str, value: f64) -> Result<(), ConfigError> {
    match param {
        "m" => file.model.m = value,
        "q" => file.model.q = Some(value),
        "p" => file.model.p = value,
        "delta1" => file.model.delta1 = value,
        "outer_radius" => file.model.outer_radius = value,
        "hole_radius" => {
            for h in file.model.holes.iter_mut() {
                h.radius = value;
            }
        }
        "t_end" => file.run.t_end = value,
        "cells" => file.grid.cells = value as usize,
        "newton_tol" => file.stepper.newton_tol = value,
        other => {
            return Err(ConfigError::Parse {
                path: "<override>".into(),
                message: format!(
                    "unknown sweep parameter {other:?} (supported: m, q, p, delta1, \
                     outer_radius, hole_radius, t_end, cells, newton_tol)"
                ),
            })
        }
    }
    Ok(())
}
