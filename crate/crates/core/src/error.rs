use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data / configuration.
    Input,
    /// Valid input on which a computation is undefined.
    Computation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing score for model {model:?} on task {task:?}")]
    MissingScore { model: String, task: String },

    #[error("empty task subset")]
    EmptySubset,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model sets differ: {0}")]
    ModelSetMismatch(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::MissingScore { .. }
            | Error::EmptySubset
            | Error::Domain(_)
            | Error::ModelSetMismatch(_)
            | Error::UndefinedCorrelation(_)
            | Error::DegenerateInput(_) => ErrorKind::Computation,
        }
    }
}
