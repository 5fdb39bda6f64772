use thiserror::Error;

/// Library-wide error type. Exit-code mapping for the CLI: precondition
/// violations exit with 2, internal assertion failures with 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown base construction `{0}`")]
    UnknownBase(String),
    #[error("size {size} unsupported by base `{base}`: {reason}")]
    UnsupportedSize {
        base: String,
        size: usize,
        reason: String,
    },
    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("size {size} below family minimum {min}")]
    BelowFamilyMinimum { size: usize, min: usize },
    #[error("boosted degree {degree} exceeds cap {cap}; the requested exponent is impractical")]
    DegreeOverflow { degree: u128, cap: u64 },
    #[error("exhaustive verification capped at N = {cap}, got N = {n}")]
    ExhaustiveCap { n: usize, cap: usize },
    #[error("power iteration did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("matching protocol still has {unsatisfied} unsatisfied vertices after {rounds} rounds; density or DISC precondition violated")]
    ProtocolStall { unsatisfied: usize, rounds: usize },
    #[error("compressed state needs {words} words of {word_bits} bits, budget is {budget} words")]
    StateOverflow {
        words: usize,
        budget: usize,
        word_bits: u32,
    },
    #[error("density precondition violated: {marked} marked of {total} exceeds budget {budget}")]
    DensityViolation {
        marked: usize,
        total: usize,
        budget: usize,
    },
    #[error("marked word count {words} != marked position count {positions}")]
    MarkCountMismatch { words: usize, positions: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
