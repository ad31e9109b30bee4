use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("level n={n} is outside the discrete spectrum ({count} bound states)")]
    IndexOutOfSpectrum { n: usize, count: usize },

    #[error("normalization quadrature did not converge: {0}")]
    NormalizationFailure(String),

    #[error("evaluation at singular point x={0}")]
    EvaluationAtSingularity(f64),

    #[error("operation not supported for model {0}")]
    UnsupportedModel(String),

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("alpha(E) vanishes while R_-1(E) is nonzero")]
    DivisionByZeroAlpha,

    #[error("derivative order {requested} exceeds available order {available}")]
    InsufficientDerivativeOrder { requested: usize, available: usize },

    #[error("target level is outside the spectrum: {0}")]
    TargetOutOfSpectrum(String),

    #[error("operator image is numerically zero (norm {0:e})")]
    DegenerateImage(f64),

    #[error("fitted epsilon is not constant across test functions (spread {0:e})")]
    NonConstantEpsilon(f64),

    #[error("ladder chain broke at level {level}: residual {residual:e}")]
    ChainBreak { level: usize, residual: f64 },

    #[error("Dirichlet truncation too tight: boundary mass {0:e}")]
    TruncationTooTight(f64),

    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error("non-finite polynomial value")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;
