use std::fmt;
use std::path::Path;

use echobeat_core::formats::ErrorReport;
use serde_json::{json, Value};

pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A failure reported to the user as JSON on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub context: Value,
    pub exit_code: i32,
}

impl CliError {
    pub fn data(code: &str, message: impl Into<String>, context: Value) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            context,
            exit_code: EXIT_DATA,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "USAGE".to_string(),
            message: message.into(),
            context: json!({}),
            exit_code: EXIT_USAGE,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::data("IO", err.to_string(), json!({ "path": path.display().to_string() }))
    }

    pub fn config(path: &Path, message: impl Into<String>) -> Self {
        Self::data(
            "INVALID_CONFIG",
            message,
            json!({ "path": path.display().to_string() }),
        )
    }

    pub fn with_context(mut self, key: &str, value: impl Into<Value>) -> Self {
        if let Value::Object(map) = &mut self.context {
            map.insert(key.to_string(), value.into());
        }
        self
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            schema_version: echobeat_core::formats::SCHEMA_VERSION,
            code: self.code.clone(),
            message: self.message.clone(),
            context: self.context.clone(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<echobeat_core::Error> for CliError {
    fn from(e: echobeat_core::Error) -> Self {
        Self::data(e.code(), e.to_string(), json!({}))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line());
        Self::data("CSV", e.to_string(), json!({ "line": line }))
    }
}
