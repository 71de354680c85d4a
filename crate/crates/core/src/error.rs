use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("index {index} out of range (count {count})")]
    Index { index: usize, count: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid knot vector: {0}")]
    Knots(String),
    #[error("invalid shell: {0}")]
    InvalidShell(String),
    #[error("open shell: {0} unmatched boundary segment(s)")]
    OpenShell(usize),
    #[error("degenerate split at {t} along axis {axis}: {reason}")]
    DegenerateSplit { t: f64, axis: usize, reason: String },
    #[error("back-projection failed: {0}")]
    BackProjection(String),
    #[error("polyhedron fallback failed: {0}")]
    FallbackFailure(String),
    #[error("subdivision depth exceeded ({depth}); {tiles} tile(s) produced before giving up")]
    DepthExceeded { depth: usize, tiles: usize },
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("undefined reference `{0}`")]
    Reference(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain { value, lo, hi }
    }
}
