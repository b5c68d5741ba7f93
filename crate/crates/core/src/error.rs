use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or input dimension is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The request is valid but would be too expensive to honour.
    #[error("refused: {0}")]
    Refused(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    /// A single run in an experiment grid failed.
    #[error("run failed at k={k}, landscape {landscape_id}, run {run_id} ({algorithm}): {source}")]
    Run {
        k: usize,
        landscape_id: usize,
        run_id: usize,
        algorithm: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl ToString) -> Self {
        Error::Format {
            what,
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
