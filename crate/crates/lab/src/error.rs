use std::io;
use std::path::PathBuf;

use blowup_core::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("invalid config: {0}")]
    ConfigParse(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no sweep axes given; use run_experiment (the `run` command) for a single configuration")]
    EmptySweep,
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }

    /// Process exit code: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::ConfigRead { .. }
            | LabError::ConfigParse(_)
            | LabError::ValidationFailed(_)
            | LabError::EmptySweep => 2,
            _ => 1,
        }
    }
}
