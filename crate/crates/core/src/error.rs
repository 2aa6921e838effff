use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty response")]
    EmptyResponse,
    #[error("no answer found")]
    NoAnswerFound,
    #[error("rollout requires simulator-labeled prefix")]
    UnlabeledPrefix,
    #[error("T must be positive")]
    NonPositiveRollouts,
    #[error("ground truth unavailable")]
    GroundTruthUnavailable,
    #[error("reward out of open interval: {0}")]
    RewardOutOfRange(f64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDim { expected: usize, got: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step {step_index} of solution {solution_index} has no binary label")]
    UnlabeledStep { solution_index: usize, step_index: usize },
    #[error("solution {0} has no outcome label")]
    MissingOutcomeLabel(usize),
    #[error("selector {0} requires a scorer")]
    MissingScorer(&'static str),
    #[error("unknown reference: {0}")]
    UnknownReference(String),
    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation failures map to exit status 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
