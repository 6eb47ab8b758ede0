//! Crate-wide error type with machine-readable diagnostics.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two enclosures overlap at the maximum configured precision; the
    /// comparison cannot be decided. Carries both enclosures so the caller
    /// can audit the failure instead of trusting a guess.
    #[error("ambiguous comparison at {bits} bits ({context}): lhs={lhs} rhs={rhs}")]
    AmbiguousComparison {
        bits: u32,
        lhs: String,
        rhs: String,
        context: String,
    },

    #[error("precision escalation exhausted at {max_bits} bits ({context})")]
    PrecisionExhausted { max_bits: u32, context: String },

    #[error("prime capacity exceeded: need primes up to {needed}, capacity {capacity}")]
    PrimeCapacity { needed: u64, capacity: u64 },

    #[error("truncation norm {horizon} too small: {reason}")]
    HorizonTooSmall { horizon: u64, reason: String },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("character of modulus {modulus} takes no unit value on prime norms below the scan horizon")]
    NoUnitPrime { modulus: String },

    #[error("character is not real-valued: {0}")]
    NotRealCharacter(String),

    #[error("multiplicativity violated: chi({a})*chi({b}) != chi({ab})")]
    NotMultiplicative { a: u64, b: u64, ab: u64 },

    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),

    #[error("polynomial is not squarefree mod {p}: gcd witness {witness}")]
    NotSquarefree { p: u64, witness: String },

    #[error("prime {p} ramifies in the polynomial field but is not in the ramified-prime table")]
    UntabulatedRamified { p: u64 },

    #[error("field asserted Galois but factor degrees {degrees:?} mod {p} are not uniform")]
    NotGalois { p: u64, degrees: Vec<u32> },

    #[error("cannot verify irreducibility over Q: {0}")]
    IrreducibilityUnverified(String),

    #[error("inert/split prime cap exceeded: |T| would be {needed}, cap {cap}")]
    InertSetCap { needed: u64, cap: u64 },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Exit-code contract used by the command-line front end:
    /// 1 input error, 2 ambiguity or precision exhaustion, 3 capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AmbiguousComparison { .. } | Error::PrecisionExhausted { .. } => 2,
            Error::PrimeCapacity { .. }
            | Error::HorizonTooSmall { .. }
            | Error::InertSetCap { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
