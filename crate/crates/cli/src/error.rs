use schauder_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// JSON pointer into the spec file.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec file is invalid ({} problem(s))", .0.len())]
    Schema(Vec<Diagnostic>),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const SCHEMA: i32 = 1;
    pub const UNSUPPORTED: i32 = 2;
    pub const PRECONDITION: i32 = 3;
    pub const CERTIFICATE: i32 = 4;
    pub const IO: i32 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => exit::SCHEMA,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                CoreError::EmptyInput | CoreError::InvalidInput(_) => exit::SCHEMA,
                CoreError::UnsupportedClass(_) => exit::UNSUPPORTED,
                CoreError::PreconditionViolated(_)
                | CoreError::NotSummable(_)
                | CoreError::NotCompact
                | CoreError::NotSimilar(_) => exit::PRECONDITION,
                CoreError::StepCapExceeded { .. }
                | CoreError::UnknownTail { .. }
                | CoreError::ConvergenceFailure(_) => exit::CERTIFICATE,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn block(&self) -> ErrorBlock {
        ErrorBlock {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            diagnostics: match self {
                CliError::Schema(d) => d.clone(),
                _ => Vec::new(),
            },
        }
    }
}

/// Machine-readable failure summary, written to stderr and the report.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBlock {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}
