use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid representation: {0}")]
    InvalidRep(String),
    #[error("group element outside the principal logarithm branch (spectral radius of g - I is {0:.3e})")]
    OutOfBranch(f64),
    #[error("matrix leaves the algebra span (projection residual {0:.3e})")]
    NotInAlgebra(f64),
    #[error("coframe is singular (condition number {0:.3e})")]
    SingularCoframe(f64),
    #[error("operation needs exact derivatives; sampled backend given")]
    BackendUnsupported,
    #[error("form is not horizontal (residual {0:.3e})")]
    NotHorizontal(f64),
    #[error("multilinear function is not invariant (residual {0:.3e})")]
    NotInvariant(f64),
    #[error("connections live on different models")]
    ModelMismatch,
    #[error("subgroup relation violated (residual {0:.3e})")]
    SubgroupViolation(f64),
    #[error("complement is not ad(g)-invariant (residual {0:.3e})")]
    NotReductive(f64),
    #[error("integration step unstable (local error {0:.3e})")]
    StepUnstable(f64),
    #[error("complement is not G-invariant (leakage {0:.3e})")]
    NotGInvariant(f64),
    #[error("frame field is singular at the given point")]
    SingularFrame,
    #[error("torsion normalization has no solution (residual {0:.3e})")]
    NoSolution(f64),
    #[error("group is not of type 1 (dim g^(1) = {0})")]
    NotType1(usize),
    #[error("group is not of type 2")]
    NotType2,
    #[error("type-2 construction is only available on the flat standard model")]
    UnsupportedCurvedBase,
    #[error("linear part of the jet is singular")]
    SingularLinearPart,
    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),
    #[error("form targets do not match: {0}")]
    TargetMismatch(String),
    #[error("truncated bracket does not close (residual {0:.3e})")]
    TruncationNotClosed(f64),
    #[error("path is not closed (gap {0:.3e})")]
    PathNotClosed(f64),
    #[error("path leaves the chart box (excess {0:.3e})")]
    OutsideChart(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
