use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Annex-B stream or one of its syntax structures is not well formed.
    #[error("malformed stream: {0}")]
    MalformedStream(String),

    /// Syntax the parser recognises but deliberately does not handle.
    #[error("unsupported feature: {0}")]
    Unsupported(String),

    /// A caller handed in something that violates an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A model formula left its mathematical domain (log of a non-positive
    /// value, division by zero, non-finite intermediate).
    #[error("domain error in {model}: {detail}")]
    Domain { model: &'static str, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Pearson correlation is undefined (fewer than two points or a
    /// zero-variance series).
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown model id `{given}` (known: {known})")]
    UnknownModel { given: String, known: String },

    #[error("coefficient arity mismatch for {model}: expected {expected}, got {got}")]
    Arity {
        model: &'static str,
        expected: usize,
        got: usize,
    },

    /// A CSV or JSON document violated its schema.
    #[error("schema error at row {row}, column `{column}`: {detail}")]
    Schema {
        row: usize,
        column: String,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(model: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            model,
            detail: detail.into(),
        }
    }

    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedStream(_) => "malformed_stream",
            Error::Unsupported(_) => "unsupported",
            Error::Precondition(_) => "precondition",
            Error::Domain { .. } => "domain",
            Error::InvalidInput(_) => "invalid_input",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::EmptyDataset => "empty_dataset",
            Error::UnknownModel { .. } => "unknown_model",
            Error::Arity { .. } => "arity",
            Error::Schema { .. } => "schema",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
