use std::path::PathBuf;

use crate::geometry::Pose;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("tracking diverged at frame {frame}")]
    DivergedTracking { frame: usize, last_pose: Box<Pose> },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: bad format: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than by inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DivergedTracking { .. } | Error::UndefinedMetric(_)
        )
    }
}
