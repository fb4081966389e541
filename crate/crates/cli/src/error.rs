use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("orbit size cap of {cap} elements exceeded")]
    CapExceeded { cap: usize },

    #[error(transparent)]
    Library(horoflag::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<horoflag::Error> for CliError {
    fn from(e: horoflag::Error) -> Self {
        match e {
            horoflag::Error::CapExceeded { cap } => CliError::CapExceeded { cap },
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 when the orbit cap
    /// is exceeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::CapExceeded { .. } => 3,
            _ => 1,
        }
    }
}
