use thiserror::Error;

/// Driver-level errors, each mapping to a distinct process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Solver(lindblad_npi::Error),
}

impl From<lindblad_npi::Error> for CliError {
    fn from(e: lindblad_npi::Error) -> Self {
        use lindblad_npi::Error as E;
        match e {
            E::DimensionMismatch(_)
            | E::InvalidParameter(_)
            | E::DimensionOverflow(_)
            | E::DerivativesUnavailable => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    /// 0 is success; 2 config, 3 numerical divergence, 4 failed resolution
    /// check, 1 everything else.
    pub fn exit_code(&self) -> i32 {
        use lindblad_npi::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Solver(E::ResolutionCheck { .. }) => 4,
            CliError::Solver(
                E::Diverged(_) | E::SingularSystem { .. } | E::ZeroFactor | E::RankOverflow { .. },
            ) => 3,
            CliError::Solver(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
