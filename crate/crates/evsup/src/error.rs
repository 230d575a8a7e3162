use std::path::PathBuf;

/// Errors of the std layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("refusing to write into nonempty directory {0}")]
    Overwrite(PathBuf),
    #[error("missing artifact {0}")]
    Missing(PathBuf),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] evsup_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Core(evsup_core::Error::InvalidConfig(_)) => 2,
            AppError::Overwrite(_) => 3,
            AppError::Missing(_) => 4,
            AppError::Numerical(_) => 5,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
        let path = path.into();
        move |source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                AppError::Missing(path)
            } else {
                AppError::Io { path, source }
            }
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl ToString) -> AppError {
        AppError::Format { path: path.into(), msg: msg.to_string() }
    }
}

pub type AppResult<T> = Result<T, AppError>;
