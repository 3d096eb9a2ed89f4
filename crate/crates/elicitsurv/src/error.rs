use std::path::PathBuf;

use elicitsurv_core::Error as CoreError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// A failure inside one of the computational modules.
    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: CoreError,
    },
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn core(module: &'static str) -> impl FnOnce(CoreError) -> AppError {
        move |source| AppError::Core { module, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Io { path, source }
    }

    /// Process exit code: 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core { source, .. } if is_numerical(source) => 3,
            _ => 2,
        }
    }
}

pub fn is_numerical(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::HazardOverflow { .. }
            | CoreError::FitFailed { .. }
            | CoreError::ZeroEvidence
            | CoreError::DegeneratePrior
            | CoreError::DegenerateWeights
            | CoreError::Unsummarizable { .. }
            | CoreError::Optimizer(_)
    )
}
