use thiserror::Error;

/// Errors produced by catalog construction, policies, solvers and configs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {what} = {index}, expected < {bound}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("policy `{policy}` requires multi-representation sizes in the catalog")]
    MissingMrSizes { policy: &'static str },

    #[error("hybrid feasibility violated for object {object}, version {version}: {reason}")]
    HybridInfeasible {
        object: usize,
        version: usize,
        reason: String,
    },

    #[error("knapsack table of {cells} cells exceeds the cap of {cap}; use a coarser resolution")]
    TableTooLarge { cells: u128, cap: u128 },

    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("malformed trace line {line}: {reason}")]
    TraceFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
