use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A problem parameter violates one of the admissibility constraints.
    #[error("invalid parameters: {constraint}")]
    InvalidParams { constraint: String },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cells overlap: {0}")]
    CellOverlap(String),

    /// Singular quadrature did not reach the requested accuracy.
    #[error("quadrature did not converge for {pair} (last relative change {last_change:.3e})")]
    Quadrature { pair: String, last_change: f64 },

    #[error("kernel integral diverges: {0}")]
    Divergent(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("zero function has no Rayleigh quotient")]
    ZeroFunction,

    #[error("eigen solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite energy encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// The anchored solve returned a function below its anchor.
    #[error("anchor violation: u - anchor = {violation:.3e} at cell {cell}")]
    AnchorViolation { cell: usize, violation: f64 },

    #[error("no solvable starting point at lambda = {lambda} - increase lambda_high")]
    NoSolvableStart { lambda: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dense storage of {cells} cells exceeds the cap of {cap}")]
    CapExceeded { cells: usize, cap: usize },

    #[error("weight cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
