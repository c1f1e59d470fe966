use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] famiss::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// Process exit status, one per error class.
    pub fn exit_code(&self) -> i32 {
        use famiss::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::Io(_) => 3,
                E::Parse { .. } | E::Format(_) => 4,
                E::DimensionMismatch { .. } | E::NonFinite(_) | E::InvalidArgument(_) => 5,
                E::Degenerate(_) | E::Numerical(_) => 6,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
