//! Error records with stable exit codes.
//!
//! Every failure is printed to stderr as a single-line JSON record. Bad
//! configuration (including model combinations a mode cannot serve) exits
//! with 2 and names the offending field where one is known; failures of the
//! numerics themselves exit with 3.

use defosc_core::Error as CoreError;

#[derive(Clone, Debug)]
pub enum CliError {
    Config { field: Option<String>, message: String },
    Numerical { message: String },
    Io { message: String },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: Some(field.into()), message: message.into() }
    }

    pub fn config_plain(message: impl Into<String>) -> Self {
        CliError::Config { field: None, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical { message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError::Io { message: message.into() }
    }

    /// Classifies a core error and, when it is a configuration problem,
    /// pins it to the config field that supplied the value.
    pub fn at_field(err: CoreError, field: &str) -> Self {
        match CliError::from(err) {
            CliError::Config { message, .. } => CliError::config(field, message),
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    pub fn record(&self) -> serde_json::Value {
        match self {
            CliError::Config { field, message } => serde_json::json!({
                "error": "config",
                "field": field,
                "message": message,
            }),
            CliError::Numerical { message } => serde_json::json!({
                "error": "numerical",
                "message": message,
            }),
            CliError::Io { message } => serde_json::json!({
                "error": "io",
                "message": message,
            }),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Domain(_)
            | CoreError::Range(_)
            | CoreError::Dimension(_)
            | CoreError::UnsupportedModel(_) => {
                CliError::Config { field: None, message: err.to_string() }
            }
            CoreError::DegenerateModel(_) | CoreError::Numerical(_) => {
                CliError::Numerical { message: err.to_string() }
            }
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { field: Some(field), message } => write!(f, "config ({field}): {message}"),
            CliError::Config { field: None, message } => write!(f, "config: {message}"),
            CliError::Numerical { message } => write!(f, "numerical: {message}"),
            CliError::Io { message } => write!(f, "io: {message}"),
        }
    }
}
