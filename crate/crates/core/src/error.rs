use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// The kernel matrix on the selected points is not numerically positive definite.
    #[error("singular point configuration: kernel matrix not positive definite at leading minor {minor}")]
    SingularConfiguration { minor: usize },

    /// Cholesky factorization of the whitening Gramian broke down.
    #[error("ill-conditioned Gramian: Cholesky failed at leading minor {minor}")]
    IllConditionedGramian { minor: usize },

    #[error("kernel `{0}` has no exact L2 expansion")]
    MissingExpansion(String),

    #[error("kernel `{0}` has neither a closed-form nor an expansion trace on this domain")]
    MissingTrace(String),

    #[error("Newton basis breakdown at step {step}: pivot residual {residual:e} below threshold {threshold:e}")]
    Breakdown {
        step: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("fit window has {usable} usable samples after excluding {excluded} nonpositive values; need at least 2")]
    WindowTooSmall { usable: usize, excluded: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown kernel id `{0}`")]
    UnknownKernel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
