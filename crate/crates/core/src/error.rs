use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },
    #[error("majorana index {index} out of range for {n_modes} modes")]
    MajoranaOutOfRange { index: usize, n_modes: usize },
    #[error("dimension mismatch: expected {expected} modes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} modes exceeds the supported maximum")]
    TooManyModes(usize),
    #[error("state norm deviates from one by {0:e}")]
    NotNormalized(f64),
    #[error("sampled measurement branch has vanishing probability {0:e}")]
    VanishingBranch(f64),
    #[error("pauli string is not hermitian")]
    NonHermitianPauli,
    #[error("exponential action did not converge: {0}")]
    NonConvergence(String),
    #[error("operator is not particle-number conserving (off-sector element {0:e})")]
    NotNumberConserving(f64),
    #[error("generator is not anti-hermitian (real expectation {0:e})")]
    NotAntiHermitian(f64),
    #[error("invalid majorana combination: {0}")]
    InvalidCombination(String),
    #[error("mapping is not an even permutation")]
    InvalidPermutation,
    #[error("expectation source holds order {have}, need {need}")]
    OrderInsufficient { have: usize, need: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("wedge product order {0} exceeds the supported maximum of 4")]
    OrderOverflow(usize),
    #[error("accuracy ratio undefined: zero denominator")]
    ZeroDenominator,
    #[error("pipeline {pipeline} requires the {order}-RDM")]
    MissingTensor { order: usize, pipeline: &'static str },
    #[error("overlap matrix is numerically zero")]
    SingularOverlap,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
