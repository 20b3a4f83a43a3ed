use std::fmt;

use serde::Serialize;

/// What went wrong, in the shape printed on stderr.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Config,
    Dependency,
    Artifact,
    Model,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Config => 3,
            ErrorKind::Dependency => 4,
            ErrorKind::Artifact => 5,
            ErrorKind::Model => 6,
            ErrorKind::Io => 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// JSON path into the config, or the file involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            path: None,
        }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn config(message: impl Into<String>, path: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message).at(path)
    }

    pub fn io(err: std::io::Error, path: &std::path::Path) -> Self {
        Self::new(ErrorKind::Io, err.to_string()).at(path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{:?} error at {p}: {}", self.kind, self.message),
            None => write!(f, "{:?} error: {}", self.kind, self.message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<svcrb_core::ModelError> for CliError {
    fn from(e: svcrb_core::ModelError) -> Self {
        Self::new(ErrorKind::Model, e.to_string())
    }
}
