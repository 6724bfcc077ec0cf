use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum NegsimError {
    /// Arguments outside an operation's domain (bad index, dimension mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input failed a structural validation check (non-unitary gate, non-Hermitian matrix, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical method could not reach its accuracy target.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Single-qubit gate decomposition failed its round-trip check.
    #[error("decomposition error: {0}")]
    Decomposition(String),

    /// Two algebraically equivalent routes disagreed beyond tolerance.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),

    /// No data left after filtering.
    #[error("empty result: {0}")]
    Empty(String),

    /// Not enough data for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Tomography record set is missing required settings.
    #[error("incomplete data: {0}")]
    IncompleteData(String),

    /// Requested target cannot be reached from the given input.
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    /// Bad run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Persisted file has an incompatible schema version.
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NegsimError>;
