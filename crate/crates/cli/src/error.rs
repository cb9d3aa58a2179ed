use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A config value that failed to parse or validate, with its JSON path.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} grid arms failed")]
    ArmsFailed { failed: usize, total: usize },

    #[error("panic: {0}")]
    Panic(String),

    #[error(transparent)]
    Core(#[from] rmgd_core::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::File {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Usage(_) => "usage",
            Self::File { .. } => "io",
            Self::ArmsFailed { .. } => "arms_failed",
            Self::Panic(_) => "panic",
            Self::Core(e) => e.kind(),
        }
    }

    /// Single-line JSON object for stderr and failure markers.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        if let Self::Config { path, .. } = self {
            obj["path"] = serde_json::Value::String(path.clone());
        }
        obj.to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
