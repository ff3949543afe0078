use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto process exit codes: configuration problems
/// (including I/O while reading configs) exit with 3, violated invariants
/// and domain errors with 2.
#[derive(Debug, Error)]
pub enum Error {
    /// State outside the physical domain of an equation of state or solver.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural hypothesis on the model failed (audit, positivity, ...).
    #[error("structural check failed: {0}")]
    Structural(String),

    /// A runtime invariant was violated (CFL, window escape, parity, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Bad configuration, arguments or input files.
    #[error("config error: {0}")]
    Config(String),

    /// Grid/shape mismatch between operands.
    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI should terminate with for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 3,
            _ => 2,
        }
    }
}
