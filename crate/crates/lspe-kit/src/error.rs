//! Kit-level failures and the process exit codes they map to.
//!
//! The contract is: exit `0` on success, `1` when the inputs are at fault
//! (config files, matrix/measurement files, CLI usage), `2` when the inputs
//! were fine but the computation failed numerically.

use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything the harness can fail with.
#[derive(Debug, Error)]
pub enum KitError {
    /// A config or data file was syntactically or semantically wrong.
    /// `line` is 1-based; 0 means the problem is not tied to one line.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    /// The parsed inputs don't form a runnable experiment.
    #[error("{msg}")]
    Invalid { msg: String },
    /// Reading or writing a file failed.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The computation itself failed (factorization, degenerate covariance,
    /// non-convergence, ...).
    #[error("numerical failure: {0}")]
    Numerical(lspe_core::Error),
}

impl KitError {
    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> KitError {
        KitError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> KitError {
        KitError::Invalid { msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> KitError {
        KitError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// The exit code this failure terminates the process with.
    pub fn exit_code(&self) -> u8 {
        match self {
            KitError::Parse { .. } | KitError::Invalid { .. } | KitError::Io { .. } => 1,
            KitError::Numerical(_) => 2,
        }
    }
}

impl From<lspe_core::Error> for KitError {
    fn from(e: lspe_core::Error) -> KitError {
        KitError::Numerical(e)
    }
}

pub type Result<T> = std::result::Result<T, KitError>;
