//! Batch front-end: experiment configs in, CSV tables and JSON sidecars out.

pub mod config;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind, Preset};
pub use run::{run, RunOutput};
pub use validate::{validate, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit status: 1 for configuration, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<atomic_arrays::Error> for CliError {
    fn from(e: atomic_arrays::Error) -> Self {
        match e.kind() {
            atomic_arrays::ErrorKind::Config => CliError::Config(e.to_string()),
            atomic_arrays::ErrorKind::Numerical => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}
