use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid physics configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("mode offset mismatch: {left} vs {right}")]
    ModeOffsetMismatch { left: f64, right: f64 },

    #[error("wavefunction has zero or non-finite norm")]
    DegenerateState,

    #[error("probability {mass:e} within the y-boundary layer exceeds {limit:e} ({context})")]
    Truncation { mass: f64, limit: f64, context: String },

    #[error("{0} does not fit inside the y-box")]
    OutsideBox(String),

    #[error("state is not single-valued on the cylinder (mode offset {0})")]
    NotSingleValued(f64),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("time {t} outside protocol range [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("step-halving disagreement {difference:e} exceeds tolerance {tolerance:e}")]
    StepTooLarge { difference: f64, tolerance: f64 },

    #[error("oscillator expansion captured only {captured} of the norm")]
    IncompleteExpansion { captured: f64 },

    #[error("oracle input rejected: {0}")]
    OracleInput(String),

    #[error("evolution is not cyclic: fidelity {fidelity} below {threshold}")]
    NotCyclic { fidelity: f64, threshold: f64 },

    #[error("invalid loop: {0}")]
    InvalidLoop(String),
}
