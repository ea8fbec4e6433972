use std::io;
use std::path::PathBuf;

use htpg_core::netlist::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: invalid config: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Netlist { path: PathBuf, source: ParseError },
    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] htpg_core::Error),
}

impl CliError {
    /// 1 usage/config, 2 input data, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Io { .. } | CliError::Netlist { .. } | CliError::Data { .. } => 2,
            CliError::Core(htpg_core::Error::Internal(_)) => 3,
            CliError::Core(htpg_core::Error::InvalidArgument(_)) => 1,
            CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, msg: impl Into<String>) -> CliError {
        CliError::Data {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
