use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("relevance grade {0} is outside [0, 4]")]
    GradeOutOfRange(i64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset file {0} contains no documents")]
    EmptyDataset(PathBuf),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
