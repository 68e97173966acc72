use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),

    #[error("token sequence of length {0} exceeds the cap of 256")]
    TooLong(usize),

    #[error("grammar sampler produced no valid program in {0} attempts")]
    GeneratorExhausted(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training pair {index} has identical sides: {text}")]
    IdenticalPair { index: usize, text: String },

    #[error("no training pairs")]
    EmptyTrainingSet,

    #[error("round {round} aborted: the fixer repaired none of the {n_bad} bad inputs")]
    EmptyFixerPairs { round: usize, n_bad: usize },

    #[error("corpus hash mismatch: artifacts were built from {expected}, corpus is {found}")]
    CorpusHashMismatch { expected: String, found: String },

    #[error("unsupported {what} version {found}")]
    Version { what: &'static str, found: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
