use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed scenario, arguments or input files.
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numeric(poisson_transport::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<poisson_transport::Error> for CliError {
    fn from(e: poisson_transport::Error) -> Self {
        match e {
            poisson_transport::Error::Parse(m) => CliError::Parse(m),
            other => CliError::Numeric(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}
