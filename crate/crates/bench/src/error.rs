use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("sweep health check failed at x = {x}: {failed} of {total} fits failed ({first_error})")]
    SweepHealth { x: u64, failed: usize, total: usize, first_error: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Csv(String),

    #[error(transparent)]
    Core(#[from] stg_core::Error),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 config, 3 sweep health, 4 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use stg_core::Error as C;
        match self {
            BenchError::Config(_) => 2,
            BenchError::SweepHealth { .. } => 3,
            BenchError::Io { .. } | BenchError::Csv(_) => 4,
            BenchError::Core(C::InvalidArgument(_)) => 2,
            BenchError::Core(C::Load { .. } | C::Io(_)) => 4,
            BenchError::Core(_) => 1,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
