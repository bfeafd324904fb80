use std::path::PathBuf;

/// Errors produced anywhere in the concept toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid masked sentence: {0}")]
    InvalidSentence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),

    #[error("malformed backend response from /v1/{endpoint}: {reason}")]
    MalformedResponse { endpoint: String, reason: String },

    #[error("replay miss for /v1/{endpoint} (digest {digest})")]
    ReplayMiss { endpoint: String, digest: String },

    #[error("requested k={requested} exceeds backend max_k={max_k}")]
    KExceedsCapability { requested: usize, max_k: usize },

    #[error("no completion qualifies as a seed (length > 3, not a stopword, not a subword)")]
    NoEligibleSeed,

    #[error("zero-variance input: {0}")]
    ZeroVariance(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("zero-norm embedding row {row} ({label}); cosine distance undefined")]
    ZeroNormRow { row: usize, label: String },

    #[error("empty cluster")]
    EmptyCluster,

    #[error("missing annotations for {}", .0.join(", "))]
    MissingAnnotations(Vec<String>),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("fixture store write failed: {0}")]
    FixtureWrite(String),

    #[error("{0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error document.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSentence(_) => "invalid_sentence",
            Error::InvalidInput(_) => "invalid_input",
            Error::BackendUnreachable(_) => "backend_unreachable",
            Error::MalformedResponse { .. } => "malformed_response",
            Error::ReplayMiss { .. } => "replay_miss",
            Error::KExceedsCapability { .. } => "k_exceeds_capability",
            Error::NoEligibleSeed => "no_eligible_seed",
            Error::ZeroVariance(_) => "zero_variance",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::ZeroNormRow { .. } => "zero_norm_row",
            Error::EmptyCluster => "empty_cluster",
            Error::MissingAnnotations(_) => "missing_annotations",
            Error::Parse { .. } => "parse_error",
            Error::FixtureWrite(_) => "fixture_write",
            Error::Undefined(_) => "undefined",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
