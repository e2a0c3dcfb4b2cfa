//! Driver plumbing for the `searchmkt` binary: strict JSON configuration,
//! command dispatch, and deterministic CSV/JSON artifact encoding.
//!
//! Exit protocol: 0 on success, 1 on usage or computation errors, 2 when a
//! requested verification ran and failed.

use std::fmt;

pub mod commands;
pub mod config;
pub mod output;

/// Driver error. Every variant maps to exit status 1; verification failures
/// are not errors and travel through [`Outcome`] instead.
#[derive(Debug)]
pub struct CliError(String);

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<searchmkt::Error> for CliError {
    fn from(e: searchmkt::Error) -> Self {
        CliError(e.to_string())
    }
}

/// What a finished command reports back to the exit-code mapping.
#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub verification_failed: bool,
}

impl Outcome {
    pub fn ok() -> Self {
        Outcome { verification_failed: false }
    }
}
