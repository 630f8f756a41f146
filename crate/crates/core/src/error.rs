use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which objective term a diverging step belonged to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Local,
    Global,
    Topic,
}

impl std::fmt::Display for StepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepKind::Local => "local",
            StepKind::Global => "global",
            StepKind::Topic => "topic",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary empty after cutoff (min_count = {min_count})")]
    EmptyVocabulary { min_count: u64 },

    #[error("no negatives available")]
    NoNegatives,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical divergence in {kind} step (word {word}, target {target}, lr {lr:e})")]
    Divergence {
        kind: StepKind,
        word: usize,
        target: usize,
        lr: f64,
    },

    #[error("category name '{0}' not in vocabulary")]
    MissingCategory(String),

    #[error("empty candidate pool (min_count_retrieval = {0})")]
    EmptyPool(u64),

    #[error("no candidate more specific than category name '{0}'")]
    NoSpecificCandidate(String),

    #[error("term '{0}' does not occur in the corpus")]
    TermNotInCorpus(String),

    #[error("missing labels: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("no pairs")]
    NoPairs,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True when the error stems from non-finite values during training.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
