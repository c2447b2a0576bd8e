use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("band limit {0} is below the minimum of 4")]
    BandTooSmall(usize),
    #[error("band {band} exceeds the grid quadrature band {qband}")]
    GridMismatch { band: usize, qband: usize },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("fields belong to different bases or band limits")]
    BasisMismatch,
    #[error("Dirac basis validation failed: {0}")]
    BasisValidation(String),
    #[error("Möbius matrix determinant {0} is not 1")]
    NotUnimodular(f64),
    #[error("Möbius map operator norm {norm} exceeds the cap {cap}")]
    MapTooLarge { norm: f64, cap: f64 },
    #[error("weighted Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("cluster crossing: eigenvalue {0} has no stable cluster within the window")]
    ClusterCrossing(f64),
    #[error("normal frame is degenerate (condition number {0:e})")]
    FrameDegenerate(f64),
    #[error("spinor component is zero")]
    ZeroSpinor,
    #[error("rho must exceed 1 (got {0})")]
    RhoNotAboveOne(f64),
    #[error("rho must be positive (got {0})")]
    RhoNotPositive(f64),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("basin escape: residual grew from {initial:e} to {current:e}")]
    BasinEscape { initial: f64, current: f64 },
    #[error("balancing did not converge: |CM| = {defect:e} after {iterations} iterations")]
    BalanceFailed { defect: f64, iterations: usize },
    #[error("collinearity determinant {det:e} is below the floor {floor:e}")]
    Collinear { det: f64, floor: f64 },
    #[error("flow step size underflow at rho = {0}")]
    FlowStepUnderflow(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
