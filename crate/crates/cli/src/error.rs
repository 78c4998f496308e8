//! Process-level error handling.
//!
//! Every failure surfaces as either an input error (bad paths, malformed
//! files, configuration mistakes, data that violates a documented contract)
//! or an internal error (IO failures while writing, thread pool setup, bugs).
//! Input errors exit with code 1, internal errors with code 2, and both print
//! a single machine-readable JSON object to stderr.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Internal,
}

impl ErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::Input => "input",
            ErrorKind::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Input, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Internal, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 1,
            ErrorKind::Internal => 2,
        }
    }

    /// One JSON object on stderr so wrappers can parse failures without
    /// scraping free-form text.
    pub fn print_json(&self) {
        let payload = serde_json::json!({
            "error": { "kind": self.kind.label(), "message": self.message }
        });
        eprintln!("{payload}");
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;
