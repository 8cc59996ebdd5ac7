use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("bit length {0} is too small for a usable group (need at least 3)")]
    BitLengthTooSmall(u32),
    #[error("no safe prime of {bits} bits found within {budget} candidates")]
    SearchExhausted { bits: u32, budget: u64 },
    #[error("invalid group parameters: {0}")]
    InvalidParams(String),
    #[error("generator derivation did not terminate within {0} attempts")]
    DerivationFailed(u32),
    #[error("reference string seed must not be empty")]
    EmptySeed,
    #[error("value is not a member of the order-p subgroup")]
    NonMember,
    #[error("exponent has no inverse modulo p")]
    ZeroInverse,
    #[error("commitment exponent out of range 1..p-1")]
    ExponentOutOfRange,
    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: usize },
    #[error("opening at bit index {index} does not match its commitment")]
    OpeningMismatch { index: usize },
    #[error("opening count {got} does not match commitment width {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("the two exponents are not a double opening of one commitment")]
    NotDoubleOpening,
    #[error("malformed statement: {0}")]
    MalformedStatement(String),
    #[error("witness does not satisfy its row of the statement")]
    InvalidWitness,
    #[error("statement and message shapes differ")]
    ShapeMismatch,
    #[error("challenges are equal; extraction needs two distinct challenges")]
    EqualChallenges,
    #[error("transcript pair does not verify")]
    BadTranscripts,
    #[error("refusing to prove: {0}")]
    RefuseToProve(String),
    #[error("complement pairs were not verified")]
    UnverifiedPairs,
    #[error("prices violate incentive compatibility: s1={s1} > s2={s2}")]
    IcViolation { s1: u64, s2: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("verification failed in phase {phase} at message {index}: {reason}")]
    VerificationFailed { phase: String, index: usize, reason: String },
    #[error("message out of order in phase {phase}: {detail}")]
    OutOfOrder { phase: String, detail: String },
    #[error("malformed encoding at byte offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("transcript parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("enumeration budget exceeded ({0} cases)")]
    BudgetExceeded(u128),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
