use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a constellation needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("prior {index} is negative ({value})")]
    NegativePrior { index: usize, value: f64 },
    #[error("priors must sum to one, sum is {0}")]
    PriorSum(f64),
    #[error("expected {expected} priors, found {found}")]
    PriorCount { expected: usize, found: usize },
    #[error("constellation has zero total energy")]
    ZeroEnergy,
    #[error("average energy is {0}, not 1 (enable rescaling to normalize)")]
    NotNormalized(f64),
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("derivative order must be 1 or 2, got {0}")]
    InvalidOrder(u8),
    #[error("capability limit: {0}")]
    Capability(String),
    #[error("invalid half-space: {0}")]
    InvalidHalfSpace(String),
    #[error("grid must be strictly ascending and positive")]
    InvalidGrid,
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("{0} is incompatible with this curve")]
    Incompatible(String),
    #[error("curve value at index {0} is not strictly positive")]
    NonPositiveValue(usize),
    #[error("bracket [{lo}, {hi}] is not covered by the grid")]
    BracketOutsideGrid { lo: f64, hi: f64 },
    #[error("probability out of range: {0}")]
    ProbabilityOutOfRange(f64),
    #[error("no sign change of the second derivative in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("{count} sign changes of the second derivative found; only a single inflection is supported")]
    MultipleInflections { count: usize },
    #[error("function is not convex where required: {0}")]
    NonConvex(String),
    #[error("bracket expansion failed: {0}")]
    BracketExpansion(String),
    #[error("parse error: {0}")]
    Parse(String),
}
