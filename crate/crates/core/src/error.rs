use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("boson cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),

    #[error("factor index {site} out of range for a space with {len} factors")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch between operands")]
    SpaceMismatch,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hilbert-space dimension {dim} exceeds the guard of {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("coupling matrix: {0}")]
    Coupling(String),

    #[error("coupling file line {line}: {msg}")]
    CouplingParse { line: usize, msg: String },

    #[error("beat-note detuning coincides with mode {mode} frequency")]
    DetuningPole { mode: usize },

    #[error("step size underflow at t = {t} (1/omega0)")]
    StepSizeUnderflow { t: f64 },

    #[error("non-finite state encountered at t = {t} (1/omega0)")]
    NonFinite { t: f64 },

    #[error("steady state is not unique: null space has dimension {count}")]
    DegenerateSteadyState { count: usize },

    #[error("steady-state integration did not converge by t = {t}: residual {residual:e}")]
    NotConverged { t: f64, residual: f64 },

    #[error("basis vectors are not orthonormal (deviation {0:e})")]
    NonOrthonormalBasis(f64),

    #[error("pump step {step} out of range for {n_targets} targets")]
    StepOutOfRange { step: usize, n_targets: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
