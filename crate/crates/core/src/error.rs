use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max asymmetry {asymmetry:e} exceeds {tol:e}")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("metric is degenerate: condition estimate {condition:e} exceeds {limit:e}")]
    MetricDegenerate { condition: f64, limit: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("operator family is empty")]
    EmptyFamily,

    #[error("family does not resolve the identity: residual {residual:e} exceeds {tol:e}")]
    NotResolvingIdentity { residual: f64, tol: f64 },

    #[error("element {index} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { index: usize, min_eigenvalue: f64 },

    #[error("family does not span the target: residual {residual:e} exceeds {tol:e}")]
    SpanDeficient { residual: f64, tol: f64 },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("conditioning on a null event: denominator {denominator:e}")]
    NullConditioning { denominator: f64 },

    #[error("operator is not in the Naimark space")]
    NotInNaimarkSpace,

    #[error("distribution was not built from this regularized family")]
    ProvenanceMismatch,

    #[error("outcome {index} has negative probability {value:e}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("invalid POVM: {}", .0.join("; "))]
    InvalidPovm(Vec<String>),

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),
}
