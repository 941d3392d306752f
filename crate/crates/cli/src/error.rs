use std::path::PathBuf;

use serde_json::json;
use squid_core::scenarios::{ScenarioError, ScenarioReport};
use thiserror::Error;

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// Outputs were written and flagged incomplete.
    #[error("scenario incomplete: {message}")]
    Incomplete { message: String, files: Vec<PathBuf>, report: Option<Box<ScenarioReport>> },
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Some property of the validation suite failed.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Incomplete { .. } => EXIT_INCOMPLETE,
            CliError::Numerical(_) | CliError::Validation(_) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Incomplete { .. } => "scenario-incomplete",
            CliError::Numerical(_) => "numerical",
            CliError::Validation(_) => "validation",
        }
    }

    /// Machine-readable form printed to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        });
        if let CliError::Config(e) = self {
            obj["error"]["line"] = json!(e.line);
        }
        if let CliError::Incomplete { files, .. } = self {
            obj["error"]["files"] = json!(files);
        }
        obj
    }
}

pub fn from_core(e: squid_core::Error) -> CliError {
    use squid_core::Error as E;
    match e {
        E::InvalidArgument(_) | E::InvalidParams(_) | E::Normalization { .. } => CliError::Usage(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

/// Map everything except an incomplete run, which the caller handles after
/// writing outputs.
pub fn from_scenario(e: ScenarioError) -> CliError {
    match e {
        ScenarioError::Precondition(m) => CliError::Usage(m),
        ScenarioError::Numerical(e) => from_core(e),
        ScenarioError::Incomplete { run } => CliError::Incomplete {
            message: run.report.missing.join("; "),
            files: Vec::new(),
            report: Some(Box::new(run.report)),
        },
    }
}
