use thiserror::Error;

/// Numerical and validation failures raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DfaError {
    #[error("no directors")]
    EmptyInput,
    #[error("degenerate axis")]
    DegenerateAxis,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("|m| = {m} exceeds l = {l}")]
    InvalidOrder { l: usize, m: i32 },
    #[error("rank-deficient design matrix (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("null function")]
    NullFunction,
    #[error("tensor is not symmetric positive definite")]
    NotSpd,
    #[error("oblate not covered by closed form")]
    Oblate,
    #[error("frame undefined at voxel {0:?}")]
    FrameUndefined([usize; 3]),
    #[error("derivative undefined at voxel {0:?}")]
    DerivativeUndefined([usize; 3]),
    #[error("degenerate tangent")]
    DegenerateTangent,
    #[error("empty region")]
    EmptyRegion,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, DfaError>;
