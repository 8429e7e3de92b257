use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data, template, plan or argument.
    Config,
    /// Filesystem or serialization failure.
    Io,
    /// The scoring backend failed or returned something unusable.
    Backend,
    /// A request exceeded the configured enumeration cap.
    CapRefused,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("template error: {0}")]
    Template(String),

    #[error("invalid label space: {0}")]
    LabelSpace(String),

    #[error("invalid example: {0}")]
    Example(String),

    #[error("plan index {index} is out of range for a training set of {len}")]
    PlanIndexOutOfRange { index: usize, len: usize },

    #[error("plan contains index {0} more than once")]
    DuplicatePlanIndex(usize),

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("scores sum to zero; cannot normalize")]
    DegenerateScores,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("KL divergence undefined: q[{index}] = 0 where p[{index}] > 0")]
    DivergenceUndefined { index: usize },

    #[error("calibration undefined: prior[{index}] is zero")]
    CalibrationUndefined { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("enumeration over {n} demonstrations exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("candidate count for N = {0} overflows")]
    CountOverflow(usize),

    #[error("record {0} has no accuracy")]
    MissingAccuracy(usize),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("HTTP status {status} after {attempts} attempt(s): {body}")]
    HttpStatus {
        status: u16,
        attempts: u32,
        body: String,
    },

    #[error("malformed backend response: {0}")]
    MalformedResponse(String),

    #[error("no tokens for label {label:?} in backend response")]
    MissingLabelTokens { label: String },

    #[error("cache miss for key {key}")]
    CacheMiss { key: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Transport { .. }
            | Error::HttpStatus { .. }
            | Error::MalformedResponse(_)
            | Error::MissingLabelTokens { .. }
            | Error::CacheMiss { .. }
            | Error::DegenerateScores
            | Error::InvalidScore(_) => ErrorClass::Backend,
            Error::Io { .. } | Error::Json { .. } => ErrorClass::Io,
            Error::EnumerationCap { .. } | Error::CountOverflow(_) => ErrorClass::CapRefused,
            _ => ErrorClass::Config,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
