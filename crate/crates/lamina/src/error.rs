use thiserror::Error;

/// Errors produced by lamination construction, analysis and parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be at least 2, got {0}")]
    InvalidDegree(u32),

    #[error("class with fewer than 2 angles has no hull edges")]
    DegenerateClass,

    #[error("leaf endpoints must be distinct")]
    DegenerateLeaf,

    #[error("angle denominator must be nonzero")]
    ZeroDenominator,

    #[error("orbit exceeded the step cap of {0}")]
    OrbitCapExceeded(usize),

    #[error("not a generating family: {0}")]
    NotAGeneratingFamily(String),

    #[error("(pre)critical generator: {0}")]
    PrecriticalGenerator(String),

    #[error("invalid lamination: {0}")]
    InvalidLamination(String),

    #[error("face image unresolvable at this truncation depth: {0}")]
    UnresolvableAtDepth(String),

    #[error("face is not periodic under the face map")]
    NotPeriodic,

    #[error("boundary return map has degree {0}, not a rotation")]
    NotARotation(u32),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("invalid slicing family: {0}")]
    InvalidFamily(String),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
