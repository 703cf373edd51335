use std::path::PathBuf;

use fraclog_core::Error as CoreError;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error("cannot start {threads} worker threads: {message}")]
    Threads { threads: usize, message: String },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::Quadrature { .. }
                | CoreError::EigenNonConvergence { .. }
                | CoreError::NonFinite { .. }
                | CoreError::NonConvergence(_)
                | CoreError::AnchorViolation { .. }
                | CoreError::NoSolvableStart { .. },
            ) => EXIT_NONCONVERGENCE,
            _ => EXIT_INVALID,
        }
    }
}
