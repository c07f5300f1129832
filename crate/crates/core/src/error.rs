use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backend `{backend}` does not support {what}")]
    Unsupported { backend: String, what: String },
    #[error("unknown propagator backend `{0}`")]
    UnknownBackend(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureFailed(String),
    #[error("insufficient data: need at least {need} samples in window, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("non-positive sample {value} at t = {t}")]
    NonPositiveSample { t: f64, value: f64 },
    #[error("exponent p = {p} is not above the Fujita exponent {p_fujita} for n = {n}")]
    SubcriticalExponent { n: usize, p: f64, p_fujita: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("decay guard tripped at t = {t}: (1+t)^(n/2)|u|_inf = {value} exceeds {limit}")]
    DecayViolation { t: f64, value: f64, limit: f64 },
    #[error("tail estimate {tail} exceeds {limit} of the correction {correction}")]
    TailUntrusted {
        tail: f64,
        correction: f64,
        limit: f64,
    },
}

pub type Result<T> = std::result::Result<T, HeatError>;
