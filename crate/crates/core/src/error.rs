use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by the layer that produces them; the CLI maps each
/// group onto a stable exit code (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrimeModulus(String),
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("input must be positive, got {0}")]
    NonPositive(String),
    #[error("modulus {0} is even")]
    EvenModulus(String),
    #[error("Hilbert symbol arguments must be nonzero")]
    ZeroArgument,
    #[error("unsupported quadratic form rank {0}; expected 3 or 4")]
    UnsupportedRank(usize),
    #[error("the zero vector is not a projective point")]
    ZeroVector,
    #[error("point does not lie on the ambient model")]
    PointNotOnAmbient,
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("every representative of the class vanishes or is undefined at the point")]
    AllRepresentativesVanish,
    #[error("invalid family member: {0}")]
    InvalidMember(String),
    #[error("modulus {0} exceeds the 63-bit residue arithmetic range")]
    PrecisionOverflow(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) | Error::DimensionMismatch { .. } | Error::InvalidModel(_) => 2,
            Error::Inconclusive(_) => 4,
            Error::VerificationFailed(_) => 5,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
