use num_complex::Complex64;
use thiserror::Error;

use crate::poly::RootSet;

pub type Result<T, E = CorrError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("constant polynomial has no roots")]
    ConstantPolynomial,
    #[error("root iteration hit its cap; {} of the roots are unreliable", partial.total())]
    NonConvergence { partial: Box<RootSet> },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("resultant vanishes identically: the inputs share a factor")]
    DegenerateResultant,
    #[error("fiber over {at} is degenerate: the leading coefficient vanishes there")]
    DegenerateFiber { at: Complex64 },
    #[error("graph is not proper: {0}")]
    ImproperGraph(String),
    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),
    #[error("numeric exponent fit unstable (residual {residual:.3e})")]
    FitUnstable { residual: f64 },
    #[error("preimage tree too large: {size} atoms exceeds the limit {limit}")]
    TreeTooLarge { size: f64, limit: f64 },
    #[error("the diagonal is a component of the graph")]
    DiagonalDegenerate,
    #[error("branch collision at path index {index}: continuation is ambiguous")]
    BranchCollision { index: usize },
    #[error("base point {at} lies within the disk radius of a critical value")]
    BadBasePoint { at: Complex64 },
    #[error("sampler restarted {0} times on degenerate fibers")]
    TooManyRestarts(usize),
    #[error("guard violated: {0}")]
    Guard(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CorrError {
    pub fn guard(msg: impl Into<String>) -> Self {
        CorrError::Guard(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CorrError::InvalidArgument(msg.into())
    }
}
