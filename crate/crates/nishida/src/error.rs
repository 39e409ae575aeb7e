use thiserror::Error;

/// Errors raised by the library. Every fallible operation returns [`Result`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not an odd prime in the supported range")]
    BadPrime(u64),
    #[error("division by a multiple of p = {0}")]
    DivisionByZero(u32),
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),
    #[error("invalid monomial: {0}")]
    InvalidMonomial(String),
    #[error("degree {degree} exceeds the basis guard {guard}")]
    DegreeGuard { degree: u64, guard: u64 },
    #[error("invalid module: {0}")]
    InvalidModule(String),
    #[error("malformed expression: {0}")]
    MalformedExpression(String),
    #[error("unsupported rewrite: {0}")]
    Unsupported(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
