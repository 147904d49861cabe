use std::fmt;

use precoder_core::Error as CoreError;

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let text = e.to_string();
        match e {
            CoreError::Io(_) => CliError::Io(text),
            CoreError::UnsupportedOrder(_)
            | CoreError::UnknownChannel(_)
            | CoreError::InvalidCorrelation(_)
            | CoreError::Parse { .. }
            | CoreError::DimensionMismatch(_)
            | CoreError::NotSquare { .. }
            | CoreError::InvalidGroupSize { .. }
            | CoreError::InvalidParameter(_)
            | CoreError::IndexOutOfRange { .. } => CliError::Usage(text),
            CoreError::NumericalFailure(_)
            | CoreError::NonFinite(_)
            | CoreError::BudgetExceeded { .. }
            | CoreError::GroupBudgetExceeded { .. }
            | CoreError::Overflow(_)
            | CoreError::SingularSystem(_) => CliError::Numeric(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
