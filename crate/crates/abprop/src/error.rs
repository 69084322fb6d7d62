use serde_json::{json, Value};
use thiserror::Error;

/// Failures of a CLI run, each with a fixed exit status.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error(transparent)]
    Numeric(#[from] abprop_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl AppError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        AppError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// 1 verification failure, 2 configuration or input error, 3 numerical
    /// nonconvergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::VerifyFailed { .. } => 1,
            AppError::Numeric(e) if e.is_nonconvergence() => 3,
            AppError::Numeric(_) | AppError::Config { .. } | AppError::Io(_) => 2,
        }
    }

    /// Structured error record.
    pub fn record(&self) -> Value {
        let kind = match self {
            AppError::Config { .. } => "config",
            AppError::Numeric(e) if e.is_nonconvergence() => "nonconvergence",
            AppError::Numeric(_) => "domain",
            AppError::Io(_) => "io",
            AppError::VerifyFailed { .. } => "verify",
        };
        let mut rec = json!({
            "schema": crate::output::ERROR_SCHEMA,
            "kind": kind,
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let AppError::Config { key, .. } = self {
            rec["key"] = json!(key);
        }
        rec
    }
}
