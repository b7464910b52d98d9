//! File formats and the `qht` command-line front end for `qht-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod io;
pub mod output;

use qht_core::ErrorKind;

/// Exit code for malformed input or arguments.
pub const EXIT_PARSE: i32 = 1;
/// Exit code for domain or precondition errors.
pub const EXIT_DOMAIN: i32 = 2;
/// Exit code for resource guards.
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] qht_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Precondition(_) => EXIT_DOMAIN,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Resource => EXIT_RESOURCE,
                ErrorKind::Domain => EXIT_DOMAIN,
            },
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse_error",
            CliError::Precondition(_) => "precondition",
            CliError::Core(e) => e.code(),
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "code": self.code(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
