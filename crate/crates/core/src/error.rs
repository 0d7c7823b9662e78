use thiserror::Error;

/// Errors raised across the library. Every variant maps to a stable code
/// (see [`Error::code`]) so reports and the CLI can tell failures apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("elements belong to different instances: {0}")]
    InstanceMismatch(String),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown group kind `{0}`")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("power {0} requires inverses, but the semigroup has none")]
    NonPositivePower(i64),
    #[error("power overflows the coordinate range")]
    PowerOverflow,
    #[error("two distinct idempotents found: {0} and {1}")]
    TwoIdempotents(String, String),
    #[error("instance violates its axioms: {0}")]
    BrokenInstance(String),
    #[error("enumeration bound required for infinite instance")]
    BoundRequired,
    #[error("distance is not available on this instance: {0}")]
    DistanceUnavailable(String),
    #[error("instance is not normed: {0}")]
    NotNormed(String),
    #[error("gate not passed: {0}")]
    GateNotPassed(String),
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("too large for exact mode: {0}")]
    TooLarge(String),
    #[error("invalid laminar family: {0}")]
    InvalidFamily(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown letter `{0}`")]
    UnknownLetter(char),
    #[error("cannot parse word: {0}")]
    WordSyntax(String),
    #[error("cannot parse rational `{0}`")]
    BadRational(String),
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InstanceMismatch(_) => "instance-mismatch",
            Error::MalformedJson(_) => "malformed-json",
            Error::UnknownKind(_) => "unknown-kind",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidElement(_) => "invalid-element",
            Error::NonPositivePower(_) => "non-positive-power",
            Error::PowerOverflow => "power-overflow",
            Error::TwoIdempotents(..) => "two-idempotents",
            Error::BrokenInstance(_) => "broken-instance",
            Error::BoundRequired => "bound-required",
            Error::DistanceUnavailable(_) => "distance-unavailable",
            Error::NotNormed(_) => "not-normed",
            Error::GateNotPassed(_) => "gate-not-passed",
            Error::ZeroDenominator => "zero-denominator",
            Error::TooLarge(_) => "too-large",
            Error::InvalidFamily(_) => "invalid-family",
            Error::InvalidRegime(_) => "invalid-regime",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::UnknownLetter(_) => "unknown-letter",
            Error::WordSyntax(_) => "word-syntax",
            Error::BadRational(_) => "bad-rational",
            Error::UnknownFormat(_) => "unknown-format",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::MalformedJson(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
