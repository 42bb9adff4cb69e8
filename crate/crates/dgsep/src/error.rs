use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    BadImage { path: PathBuf, reason: String },

    #[error("{path}: frame is {found_rows}x{found_cols}, expected {rows}x{cols}")]
    MixedDimensions {
        path: PathBuf,
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("at least 2 frames required, found {found}")]
    TooFewFrames { found: usize },

    #[error("insufficient motion: fewer than 2 frames survive motionless removal")]
    InsufficientMotion,

    #[error("{path}: bad matrix dump: {reason}")]
    BadDump { path: PathBuf, reason: String },

    #[error("{context}: expected {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    DimensionMismatch {
        context: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("patch exceeds image: side {p} on a {n1}x{n2} frame")]
    PatchExceedsImage { p: usize, n1: usize, n2: usize },

    #[error("zero-degree graph node at index {0}")]
    ZeroDegree(usize),

    #[error("duplicate sparse entry at ({0}, {1})")]
    DuplicateEntry(usize, usize),

    #[error("SVD failed (non-finite input?)")]
    SvdFailed,

    #[error("divergent L-update, reduce dt")]
    DivergentLUpdate,

    #[error("non-finite solver state at iteration {iter}")]
    NonFiniteState { iter: usize },

    #[error("ground-truth image has zero norm")]
    ZeroNormTruth,

    #[error("trajectory leaves the frame at position {frame}: top-left ({row}, {col})")]
    TrajectoryOutOfBounds { frame: usize, row: i64, col: i64 },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bad_image(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::BadImage {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn bad_dump(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::BadDump {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
