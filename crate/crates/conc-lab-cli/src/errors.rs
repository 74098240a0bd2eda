use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Lab(#[from] conc_lab::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

/// Process exit code mandated for each failure class: 1 usage/config,
/// 2 check failure, 3 non-convergence or rejection.
pub fn exit_code_for(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) | CliError::Io(_) => 1,
        CliError::Lab(e) => match e {
            conc_lab::Error::NonConvergence { .. }
            | conc_lab::Error::RejectionRate { .. }
            | conc_lab::Error::DegeneratePivot(_)
            | conc_lab::Error::Singular(_)
            | conc_lab::Error::Admissibility(_) => 3,
            _ => 1,
        },
    }
}
