use std::fmt;
use std::process::ExitCode;

use sdi_core::{Error, ErrorCategory};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Input(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Core(e) => match e.category() {
                ErrorCategory::Input => 2,
                ErrorCategory::Numerical => 3,
                ErrorCategory::Config => 4,
            },
            CliError::Input(_) => 2,
            CliError::Config(_) => 4,
        };
        ExitCode::from(code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => {
                let label = match e.category() {
                    ErrorCategory::Input => "input error",
                    ErrorCategory::Numerical => "numerical error",
                    ErrorCategory::Config => "configuration error",
                };
                write!(f, "{label}: {e}")
            }
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
