use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Input problems (malformed files, unknown ids, bad flags) and numerical
/// problems (rank deficiency, overflow) are kept apart so the CLI can map
/// them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("duplicate candidate id `{id}` at line {line}")]
    DuplicateCandidate { id: String, line: usize },

    #[error("unknown party `{party}` at line {line} (expected D or R)")]
    UnknownParty { party: String, line: usize },

    #[error("empty roster")]
    EmptyRoster,

    #[error("roster has {0} candidates; at most 128 are supported")]
    RosterTooLarge(usize),

    #[error("unknown candidate id `{0}`")]
    UnknownCandidate(String),

    #[error("no followers")]
    NoFollowers,

    #[error("empty follow set")]
    EmptyRow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("name `{name}` maps to both genders")]
    ConflictingName { name: String },

    #[error("image predictor failed: {0}")]
    Predictor(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("design matrix is rank deficient; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("outcome class `{0}` has no observations")]
    EmptyClass(String),

    #[error("non-finite log-likelihood at row {row}")]
    NonFinite { row: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is not binary")]
    NotBinary(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::EmptyClass(_)
                | Error::NonFinite { .. }
                | Error::Dimension(_)
        )
    }
}
