use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ALL_DIVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("missing inputs: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("every cell diverged")]
    AllDiverged,
    #[error(transparent)]
    Core(#[from] ntkcorr_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ntkcorr_core::Error as E;
        match self {
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::AllDiverged => EXIT_ALL_DIVERGED,
            CliError::Core(E::Audit { .. }) => EXIT_INVARIANT,
            _ => EXIT_INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
