//! Command-line front end: single-game analysis and parameter sweeps.

pub mod analyze;
pub mod spec;
pub mod sweep;

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input files or arguments; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Anything else; exit code 2.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn load_game(path: &Path) -> Result<shared_effort::Game, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn load_spec(path: &Path) -> Result<spec::SweepSpec, CliError> {
    let s: spec::SweepSpec = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    s.validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(s)
}

impl From<sweep::SweepError> for CliError {
    fn from(e: sweep::SweepError) -> Self {
        match e {
            sweep::SweepError::Spec(_) | sweep::SweepError::Game { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}
