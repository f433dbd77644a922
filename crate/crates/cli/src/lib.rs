//! File-based front end for `rqfractal`: data parsing, job configuration and
//! the per-mode drivers behind the `rqfractal` binary.

pub mod config;
pub mod io;
pub mod jobs;

use thiserror::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Success = 0,
    Parse = 2,
    Infeasible = 3,
    Violation = 4,
    Numerical = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Library(#[from] rqfractal::Error),

    #[error("cannot encode report: {0}")]
    Report(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_kind(&self) -> ExitKind {
        use rqfractal::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Config(_) | CliError::Read { .. } => ExitKind::Parse,
            CliError::Library(e) => match e {
                E::NonConvergence { .. }
                | E::NotContractive { .. }
                | E::MatchingCondition { .. }
                | E::OffLattice { .. } => ExitKind::Numerical,
                E::Constraint { .. } => ExitKind::Infeasible,
                E::GridLine { source, .. } => CliError::Library((**source).clone()).exit_kind(),
                _ => ExitKind::Parse,
            },
            CliError::Write { .. } | CliError::Report(_) => ExitKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
