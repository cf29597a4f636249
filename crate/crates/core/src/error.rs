use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "solver stopped after {iterations} iterations without converging \
         (primal {primal_objective:.6e}, dual {dual_objective:.6e})"
    )]
    Convergence {
        iterations: usize,
        primal_objective: f64,
        dual_objective: f64,
    },

    #[error("invalid input: {0}")]
    Ingest(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("decomposition stopped after {} terms: {source}", partial.terms.len())]
    Decomposition {
        partial: Box<crate::decompose::Decomposition>,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_ingest(&self) -> bool {
        matches!(self, Error::Ingest(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
