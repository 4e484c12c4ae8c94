use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid model file {path}: {msg}")]
    ModelFile { path: PathBuf, msg: String },
    #[error("fit failed: {0}")]
    Fit(#[source] mixfit_core::Error),
    #[error("{0} self-check(s) failed")]
    SelfCheck(usize),
}

impl CliError {
    /// 1 self-check failure, 2 usage or parse error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelfCheck(_) => 1,
            CliError::Usage(_)
            | CliError::Parse { .. }
            | CliError::Io { .. }
            | CliError::ModelFile { .. } => 2,
            CliError::Fit(e) => match e {
                mixfit_core::Error::FamilyMismatch { .. }
                | mixfit_core::Error::DimensionMismatch { .. }
                | mixfit_core::Error::InvalidConfig(_) => 2,
                _ => 3,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<mixfit_core::Error> for CliError {
    fn from(e: mixfit_core::Error) -> Self {
        CliError::Fit(e)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
