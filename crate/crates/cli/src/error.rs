use thiserror::Error;

/// Exit status for a config that cannot be parsed or validated.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a numerical or I/O failure while running.
pub const EXIT_FAILURE: i32 = 3;
/// Exit status when the run completed but an assertion failed.
pub const EXIT_ASSERTION: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mixlab_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl CliError {
    /// Validation errors from the core (bad region, grid or argument) come
    /// from the experiment description, so they share the config status.
    pub fn exit_code(&self) -> i32 {
        use mixlab_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidArgument(_) | E::InvalidRegion(_) | E::InvalidGrid(_)) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) | CliError::Serialize(_) => EXIT_FAILURE,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}
