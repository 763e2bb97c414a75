use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input: exit code 2.
    #[error("{0}")]
    Input(String),
    /// Internally inconsistent mathematics: exit code 3.
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Math(_) => 3,
        }
    }
}

impl From<sympent::Error> for CliError {
    fn from(e: sympent::Error) -> Self {
        use sympent::Error as E;
        match e {
            E::StabilizerMismatch { .. }
            | E::NullBasisCount { .. }
            | E::RouteDisagreement(_)
            | E::ImaginaryResidue(_)
            | E::NotHorizontal(_) => CliError::Math(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("I/O error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("serialization error: {e}"))
    }
}
