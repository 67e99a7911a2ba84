use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Error, Debug)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid probability distribution: {0}")]
    Distribution(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("factorization failed to converge after {iterations} iterations")]
    FactorizationFailure { iterations: usize },

    #[error("sketch failure: {0}")]
    SketchFailure(String),

    #[error("iteration did not reach tolerance {tol} within {max_iter} iterations")]
    Convergence {
        tol: f64,
        max_iter: usize,
        /// Best iterate found before giving up.
        best: Box<crate::lstsq::SolveReport>,
    },

    #[error("graph is not connected")]
    Disconnected,

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("generator spec error: {0}")]
    GenSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
