use std::fmt;

use serde_json::json;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Config or input does not match its schema (exit 2).
    Schema { path: Option<String>, message: String },
    /// Well-formed input rejected by a computation (exit 3).
    Precondition(String),
    /// Filesystem failure or output collision (exit 4).
    Io(String),
}

impl CliError {
    pub fn schema(path: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "schema",
            CliError::Precondition(_) => "precondition",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        let (path, message) = match self {
            CliError::Schema { path, message } => (path.clone(), message.clone()),
            CliError::Precondition(m) | CliError::Io(m) => (None, m.clone()),
        };
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "path": path,
                "message": message,
            }
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { path: Some(p), message } => write!(f, "{p}: {message}"),
            CliError::Schema { path: None, message } => f.write_str(message),
            CliError::Precondition(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<cancellab::Error> for CliError {
    fn from(e: cancellab::Error) -> Self {
        use cancellab::Error as E;
        match e {
            E::Invalid(m) | E::Parse(m) => CliError::schema(None, m),
            E::Json(j) => CliError::schema(None, j.to_string()),
            E::Precondition(_) | E::InsufficientData { .. } => CliError::Precondition(e.to_string()),
            E::Io(io) => CliError::Io(io.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
