use thiserror::Error;

/// Errors raised by the constructions and verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{value} is not prime")]
    NotPrime { value: u64 },
    #[error("modulus {value} exceeds the supported range (at most 2^63 - 1)")]
    ModulusOutOfRange { value: u64 },
    #[error("operation requires an odd prime, got {p}")]
    EvenPrime { p: u64 },
    #[error("{a} is not invertible modulo {m}")]
    NotCoprime { a: i64, m: u64 },
    #[error("multiplier is divisible by the modulus {p}")]
    ZeroMultiplier { p: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("restricted pair ({0}, {1}) does not lie in A x B")]
    PairOutOfRange(u64, u64),
    #[error("value {value} does not encode a point of the cube with M = {m}, r = {r}")]
    NotInCube { value: u64, m: u32, r: u32 },
    #[error("empty set")]
    EmptySet,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dilation set contains 0")]
    ZeroDilation,
    #[error("theta must be nonzero modulo p")]
    ZeroTheta,

    #[error("derived parameters are too small: {0}")]
    ParamsTooLarge(String),
    #[error("set A has colliding elements: x = {x1} and x = {x2} both map to {value}")]
    DuplicateElements { x1: u64, x2: u64, value: u64 },
    #[error("digit cube overflows the field: (2M)^r = {size} > p = {p}")]
    CubeOverflow { size: String, p: u64 },
    #[error("requested {requested} columns but only {available} are available")]
    TooManyColumns { requested: usize, available: usize },

    #[error("modulus {q} must exceed P = {p_param}")]
    ModulusTooSmall { q: u64, p_param: f64 },
    #[error("stage sets have unequal sizes: {0}")]
    UnequalStageSizes(String),
    #[error("parameter condition violated: {}", .0.join("; "))]
    ParameterConditionViolated(Vec<String>),

    #[error("computation too large: cost {cost} exceeds limit {limit}")]
    TooLarge { cost: u128, limit: u128 },
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_cost(cost: u128, limit: u128) -> Result<()> {
    if cost > limit {
        Err(Error::TooLarge { cost, limit })
    } else {
        Ok(())
    }
}
