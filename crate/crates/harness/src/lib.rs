//! Command-line front end for the bilinear-form toolkit: binary instance
//! files, CSV emission, config-file handling, and the subcommand runners
//! used by the `abcs` binary.

pub mod config;
pub mod csvout;
pub mod parallel;
pub mod runner;
pub mod stream;

use std::fmt;
use std::path::PathBuf;

/// Errors surfaced by the harness layer. `Usage` maps to exit code 2,
/// degenerate core results map to exit code 3, everything else to 1.
#[derive(Debug)]
pub enum HarnessError {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Format(String),
    Core(abcs_core::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Usage(msg) => write!(f, "usage error: {msg}"),
            HarnessError::Io(path, err) => write!(f, "{}: {err}", path.display()),
            HarnessError::Format(msg) => write!(f, "format error: {msg}"),
            HarnessError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<abcs_core::Error> for HarnessError {
    fn from(err: abcs_core::Error) -> Self {
        HarnessError::Core(err)
    }
}

impl HarnessError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Core(abcs_core::Error::Degenerate(_))
            | HarnessError::Core(abcs_core::Error::NetFailure) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Whether a completed run produced a clean result or tripped the
/// degenerate-result flag (exit code 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Degenerate,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Degenerate => 3,
        }
    }
}
