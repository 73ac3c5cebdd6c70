use thiserror::Error;

/// Process exit statuses.
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] popsicle_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use popsicle_core::Error as E;
        match self {
            CliError::Verification(_) | CliError::Core(E::NoEquilibrium(_)) => EXIT_VERIFICATION,
            CliError::Core(e) if e.is_budget() => EXIT_BUDGET,
            CliError::Core(_) | CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
        }
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
