use gpd_elcr_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const ESTIMATION: i32 = 2;
    pub const OPEN_INTERVAL: i32 = 3;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error("estimation failed: {0}")]
    Estimation(CoreError),
    #[error("confidence interval is open on the {0} side")]
    OpenInterval(&'static str),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Estimation(_) => exit::ESTIMATION,
            CliError::OpenInterval(_) => exit::OPEN_INTERVAL,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Estimation(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
