use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one of the CLI
/// exit categories (config, numerical precondition, resource limit).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        module: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{module}: invalid parameter: {message}")]
    InvalidParameter {
        module: &'static str,
        message: String,
    },

    #[error("{module}: window does not cover the required region: {message}")]
    Coverage {
        module: &'static str,
        message: String,
    },

    #[error("{module}: pair count {pairs} exceeds the configured limit {limit}")]
    PairLimit {
        module: &'static str,
        pairs: usize,
        limit: usize,
    },

    #[error("autocorrelation: kernel reach {needed} exceeds retained difference range {retained}")]
    KernelRange { needed: f64, retained: f64 },

    #[error("{module}: degenerate input: {message}")]
    Degenerate {
        module: &'static str,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse error category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Resource,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numerical => 3,
            ErrorCategory::Resource => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Numerical => "numerical-precondition",
            ErrorCategory::Resource => "resource-limit",
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::PairLimit { .. } | Error::Io(_) => ErrorCategory::Resource,
            _ => ErrorCategory::Numerical,
        }
    }

    pub(crate) fn invalid(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn coverage(module: &'static str, message: impl Into<String>) -> Self {
        Error::Coverage {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn degenerate(module: &'static str, message: impl Into<String>) -> Self {
        Error::Degenerate {
            module,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
