use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min:.3e}, max {max:.3e})")]
    NotPositiveDefinite { min: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("function value is not finite at eigenvalue {at}")]
    DomainError { at: f64 },

    #[error("cochain is not flagged sigma-invariant")]
    NotInvariant,

    #[error("invalid algebra data: {0}")]
    InvalidAlgebra(String),

    #[error("operators do not commute as required: {0}")]
    IncompatibleOperators(String),

    #[error("evaluation budget exceeded: {0}")]
    MethodBudgetExceeded(String),

    #[error("element is not a projection (defect {defect:.3e})")]
    NotIdempotent { defect: f64 },

    #[error("element is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("element is not fixed by the twist (defect {defect:.3e})")]
    NotFixed { defect: f64 },

    #[error("unknown irrep label {0}")]
    UnknownIrrep(String),

    #[error("decomposition inconsistent with irrep table: {0}")]
    InconsistentDecomposition(String),

    #[error("operator is not block-scalar on the decomposition (defect {defect:.3e})")]
    BlockStructureViolation { defect: f64 },

    #[error("product exceeds the truncation cutoff: {0}")]
    TruncationOverflow(String),

    #[error("Gram matrix is numerically singular (min/max eigenvalue ratio {ratio:.3e})")]
    GramSingular { ratio: f64 },

    #[error("Peter-Weyl block identification failed: {0}")]
    BlockIdentificationFailed(String),

    #[error("tail bound {tail:.3e} exceeds the requested tolerance {tol:.3e}")]
    TailTooLarge { tail: f64, tol: f64 },

    #[error("spectral cut at {cut} lies within {gap:.3e} of the spectrum")]
    SpectralGapTooSmall { cut: f64, gap: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
