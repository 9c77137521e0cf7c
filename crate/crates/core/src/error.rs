use std::path::PathBuf;

use crate::stability::Concept;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("agent {agent} out of range for a game with {n} agents")]
    InvalidAgent { agent: usize, n: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("n = {n} exceeds the enumeration limit of {limit}")]
    LimitExceeded { n: usize, limit: usize },

    #[error("result map is missing concept {0}")]
    MissingConcept(Concept),

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether the error stems from user-supplied input rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv(_))
    }
}
