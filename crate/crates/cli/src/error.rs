use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rnlevy_core::Error),
    #[error("{what}: {msg}")]
    Input { what: String, msg: String },
    #[error("neutrality verdict is negative (residual_h = {residual:e}); the constructed measure is not supported by the prices. Pass --force to price anyway")]
    NotNeutral { residual: f64 },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn missing(what: &str) -> Self {
        CliError::Input {
            what: what.to_string(),
            msg: "required but not given".into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        use rnlevy_core::Error as E;
        ExitCode::from(match self {
            CliError::Core(E::MeshTooCoarse(_) | E::InsufficientGrid(_)) => 3,
            CliError::Core(E::IdentityViolation { .. }) => 5,
            CliError::Core(_) | CliError::Input { .. } => 2,
            CliError::NotNeutral { .. } => 4,
            CliError::Output { .. } => 1,
        })
    }
}
