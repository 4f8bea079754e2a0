use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mapga_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// The config file did not deserialize; `field` is the JSON path reached.
    #[error("config error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("image error: {0}")]
    Image(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Core(mapga_core::Error::config(field, message))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "config",
            CliError::Csv(_) => "csv",
            CliError::Image(_) => "image",
            CliError::Usage(_) => "usage",
        }
    }

    /// Offending config field, if the error names one.
    pub fn field(&self) -> Option<&str> {
        match self {
            CliError::Core(mapga_core::Error::Config { path, .. }) => Some(path),
            CliError::Parse { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Exit code: 2 for configuration and usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "usage" => 2,
            _ => 1,
        }
    }

    /// One-line JSON error report for stderr.
    pub fn machine_line(&self, config: Option<&Path>) -> String {
        let message = match self {
            CliError::Core(mapga_core::Error::Config { message, .. }) => message.clone(),
            CliError::Parse { message, .. } => message.clone(),
            CliError::Usage(message) => message.clone(),
            other => other.to_string(),
        };
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "field": self.field(),
                "config": config.map(|p| p.display().to_string()),
                "message": message,
            }
        })
        .to_string()
    }
}
