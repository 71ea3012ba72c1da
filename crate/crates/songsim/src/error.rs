use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] songsim_core::Error),
    #[error("missing upstream artifact {} (run the `{stage}` stage first)", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("workdir {} is locked by another run (remove {} if stale)", .0.parent().unwrap_or(Path::new(".")).display(), .0.display())]
    Locked(PathBuf),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<AppError>,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            AppError::Stage { .. } | AppError::Usage(_) | AppError::MissingArtifact { .. } | AppError::Locked(_) => self,
            other => AppError::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// 1 usage, 2 data, 3 stage failure. A stage error wrapping bad input
    /// still counts as a data error.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Stage { source, .. } if !matches!(**source, AppError::Core(_)) => source.exit_code(),
            AppError::Usage(_) => 1,
            AppError::Io { .. }
            | AppError::Parse { .. }
            | AppError::Data(_)
            | AppError::Core(_)
            | AppError::MissingArtifact { .. } => 2,
            AppError::Locked(_) | AppError::Stage { .. } => 3,
        }
    }
}

pub trait IoContext<T> {
    fn at(self, path: &Path) -> AppResult<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: &Path) -> AppResult<T> {
        self.map_err(|e| AppError::io(path, e))
    }
}
