//! Error type carrying the process exit code.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 numerical guard,
//! 4 internal error. Clap's own usage errors also exit with 2.

use nfcav::gratingsim::GratingError;
use nfcav::spectrum::SpectrumError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Guard(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn validation(context: &str, detail: impl fmt::Display) -> Self {
        CliError::Validation(format!("{context}: {detail}"))
    }

    pub fn internal(context: &str, detail: impl fmt::Display) -> Self {
        CliError::Internal(format!("{context}: {detail}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Guard(msg) => write!(f, "numerical guard: {msg}"),
            CliError::Internal(msg) => write!(f, "internal: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GratingError> for CliError {
    fn from(e: GratingError) -> Self {
        match e {
            GratingError::DiscretizationTooCoarse { .. }
            | GratingError::BraggOutsideWindow { .. }
            | GratingError::UnreachableTarget(_) => CliError::Guard(e.to_string()),
            GratingError::Spectrum(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("JSON serialization failed: {e}"))
    }
}
