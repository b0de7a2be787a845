use std::fmt;

/// Errors surfaced to the user, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }
}

impl From<lingof::Error> for CliError {
    fn from(e: lingof::Error) -> Self {
        use lingof::Error as E;
        match e {
            E::Unsupported { .. } | E::UnsupportedOrder(_) => CliError::Unsupported(e.to_string()),
            E::InvalidArgument(_) | E::InvalidData(_) | E::DimensionMismatch(_) => CliError::Input(e.to_string()),
            E::MissingOrder(_) | E::Numerical(_) | E::Resample { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
