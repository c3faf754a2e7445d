//! Error types shared across the crate.

use thiserror::Error;

/// Errors from problem validation and closed-form model evaluation.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// A hypothesis of the problem class is violated. Carries the inequality
    /// that failed and the numeric values of both sides.
    #[error("constraint violated: {name} (lhs = {lhs:e}, rhs = {rhs:e})")]
    ConstraintViolation {
        name: String,
        lhs: f64,
        rhs: f64,
    },
    /// A closed-form function was evaluated outside its domain of definition.
    #[error("domain error: {what} (argument = {value:e})")]
    DomainError { what: String, value: f64 },
    /// The two initial-data envelopes cross, so no profile can satisfy both.
    #[error("envelope error: lower bound exceeds upper bound (C1 = {c1:e} > C2 e^(1/delta1^2) = {limit:e})")]
    EnvelopeError { c1: f64, limit: f64 },
}

impl ModelError {
    pub fn constraint(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        ModelError::ConstraintViolation {
            name: name.into(),
            lhs,
            rhs,
        }
    }
}

/// Errors from grid construction and the implicit solvers.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("grid resolution too coarse: {0}")]
    ResolutionError(String),
    #[error("Newton iteration diverged at t = {t:e} with dt = {dt:e} (residual = {residual:e})")]
    NewtonDivergence { t: f64, dt: f64, residual: f64 },
    #[error("nonpositive cell value after implicit solve at t = {t:e}, cell {cell} (value = {value:e})")]
    NegativeValue { t: f64, cell: usize, value: f64 },
    #[error("time stepping failed at t = {t:e}: dt underflowed below dt_min = {dt_min:e}")]
    StepFailure { t: f64, dt_min: f64 },
    #[error("size mismatch: field has {got} values, grid has {expected} cells")]
    SizeMismatch { expected: usize, got: usize },
    #[error("index {index} out of range (len {len})")]
    IndexError { index: usize, len: usize },
}

/// Umbrella error for multi-stage drivers (continuation, CLI orchestration).
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("run {label}: {source}")]
    InRun {
        label: String,
        #[source]
        source: Box<RunError>,
    },
}

impl RunError {
    pub fn tagged(label: impl Into<String>, source: impl Into<RunError>) -> Self {
        RunError::InRun {
            label: label.into(),
            source: Box::new(source.into()),
        }
    }
}

/// Errors from the verification checks.
#[derive(Debug, Clone, Error)]
pub enum CheckError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("check precondition failed: {0}")]
    PreconditionError(String),
    #[error("fit window too small: {got} cells in [{r_lo:e}, {r_hi:e}], need at least {need}")]
    WindowTooSmall {
        r_lo: f64,
        r_hi: f64,
        got: usize,
        need: usize,
    },
}
