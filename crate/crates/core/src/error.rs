use thiserror::Error;

/// Errors raised by the algebra kernel, maps, systems and constructions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("amplification factor must be at least 1")]
    ZeroAmplification,

    #[error("element is not positive (min eigenvalue {min_eigenvalue:.3e}, hermitian defect {hermitian_defect:.3e})")]
    NotPositive {
        min_eigenvalue: f64,
        hermitian_defect: f64,
    },

    #[error("element is not self-adjoint (|x - x*| = {0:.3e})")]
    NotSelfAdjoint(f64),

    #[error("map is not completely positive (Choi min eigenvalue {min_eigenvalue:.6})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("map is not contractive (|f(1)| = {norm:.6})")]
    NotContractive { norm: f64 },

    #[error("step {step}: {source}")]
    InvalidStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("index error: {0}")]
    Index(String),

    #[error("order-zero defect {defect:.3e} exceeds threshold {threshold:.3e}")]
    OrderZeroThreshold { defect: f64, threshold: f64 },

    #[error("h = f(1) is numerically singular (|h| = {norm:.3e})")]
    SingularUnitImage { norm: f64 },

    #[error("norm {0:.3e} is below tolerance; ratio undefined")]
    DegenerateNorm(f64),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule infeasible at step {step}: {requirement}")]
    Infeasible { step: usize, requirement: String },

    #[error("limit elements belong to different systems or horizons")]
    SystemMismatch,

    #[error("{path}: {source}")]
    Field {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at(path: impl Into<String>, source: Error) -> Self {
        Error::Field {
            path: path.into(),
            source: Box::new(source),
        }
    }

    pub(crate) fn shape(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
