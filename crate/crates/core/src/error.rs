use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid transform: expected size {expected}, found {found}")]
    InvalidTransform { expected: usize, found: usize },

    #[error("transform matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid rank {rank}: must lie in 1..={max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("rank deficiency: singular value {index} ({value:e}) is below tolerance {tolerance:e}")]
    RankDeficient {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("problem size {size} exceeds the cap of {cap}")]
    SizeLimit { size: usize, cap: usize },

    #[error("spectral radius {radius} of transform-domain slice {slice} exceeds {limit}")]
    SpectralRadius {
        slice: usize,
        radius: f64,
        limit: f64,
    },

    #[error("{}: parse error at offset {offset}: {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::InvalidDimension(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a pipeline stage name to errors, so CLI failures say where they happened.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
