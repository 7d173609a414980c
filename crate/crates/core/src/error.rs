use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e}){}", context.as_ref().map(|c| format!(": {c}")).unwrap_or_default())]
    NonConvergence {
        iterations: usize,
        residual: f64,
        context: Option<String>,
    },

    #[error("streamed edge {row} has weight {found}, expected {expected}; equal weights are required")]
    UnequalWeights { row: usize, expected: f64, found: f64 },

    #[error("Poisson stream produced an empty sample (seed {seed}); retry with another seed")]
    EmptyPoissonSample { seed: u64 },

    #[error("outcome space of {outcomes} compositions exceeds the cap {cap}")]
    OutcomeSpaceTooLarge { outcomes: u128, cap: u128 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
