use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p^N overflows the 62-bit modulus budget (p = {p}, N = {prec})")]
    PrecisionOverflow { p: u64, prec: u32 },
    #[error("unsupported extension degree {0}")]
    UnsupportedDegree(u8),
    #[error("inverse of a non-unit")]
    NonUnitInverse,
    #[error("outside the convergence domain: {0}")]
    ConvergenceDomain(String),
    #[error("no square root exists modulo p")]
    NonResidue,
    #[error("operands live in different p-adic rings")]
    RingMismatch,
    #[error("exact division needs valuation {needed}, found {found}")]
    InsufficientValuation { needed: u32, found: u32 },
    #[error("value has negative valuation {0} and is not integral")]
    NegativeValuation(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("{0} ramifies in the field")]
    RamifiedPrime(u64),
    #[error("unsupported prime: {0}")]
    UnsupportedPrime(String),
    #[error("norm {0} exceeds the 64-bit factorization budget")]
    FactorizationOverflow(String),
    #[error("q-expansions live on different index sets: {0}")]
    IndexMismatch(String),
    #[error("index with non-unit embedding in the support: {0}")]
    NonUnitIndex(String),
    #[error("central character mismatch: m = {m}, n = {n}")]
    CentralCharMismatch { m: i64, n: i64 },
    #[error("weight mismatch: {0}")]
    WeightMismatch(String),
    #[error("zero denominator factor {0} in the overconvergent projection")]
    ZeroDenominator(i64),
    #[error("coefficient in degree {degree} has valuation {found}, below {degree}")]
    InsufficientValuation { degree: usize, found: u32 },
    #[error("basis is not U-stable: {0}")]
    NotUStable(String),
    #[error("matching depth {depth} is below the dimension {dim}")]
    UnderDetermined { depth: usize, dim: usize },
    #[error("Hecke roots have equal slopes")]
    EqualSlopes,
    #[error("form is not in the span of the basis: {0}")]
    NotInSpan(String),
    #[error("eigen data cannot isolate the form: {0}")]
    NotSeparated(String),
    #[error("polynomial decomposition failed verification")]
    DecompositionFailed,
    #[error("form is not a Hecke eigenform: {0}")]
    NotEigenform(String),
    #[error("prime {0} divides the normalization denominator")]
    BadPrime(u64),
    #[error("curve is singular")]
    SingularCurve,
    #[error("schema error at {pointer}: {message}")]
    SchemaError { pointer: String, message: String },
    #[error("exceptional zero: {0} vanishes")]
    ExceptionalZero(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    /// Attaches a pipeline stage name.
    pub fn at(self, stage: &str) -> Error {
        match self {
            Error::Stage { .. } => self,
            e => Error::Stage { stage: stage.to_string(), source: Box::new(e) },
        }
    }

    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 3 for configuration problems, 4 for precision
    /// exhaustion, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Padic(PadicError::PrecisionOverflow { .. })
            | Error::Padic(PadicError::InsufficientValuation { .. })
            | Error::Padic(PadicError::NegativeValuation(_))
            | Error::InsufficientValuation { .. } => 4,
            Error::Padic(_)
            | Error::UnsupportedField(_)
            | Error::RamifiedPrime(_)
            | Error::UnsupportedPrime(_)
            | Error::CentralCharMismatch { .. }
            | Error::WeightMismatch(_)
            | Error::SchemaError { .. }
            | Error::Config(_)
            | Error::BadPrime(_)
            | Error::SingularCurve
            | Error::IndexMismatch(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
