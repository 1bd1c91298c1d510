use thiserror::Error;

/// Errors raised by copula construction, estimation and inference.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A copula description violates one of its invariants.
    #[error("invalid copula ({invariant}): {detail}")]
    InvalidCopula {
        invariant: &'static str,
        detail: String,
    },

    /// The response variable is constant, so xi is undefined.
    #[error("degenerate response: xi requires non-constant Y")]
    DegenerateY,

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("length mismatch: {xs} x values vs {ys} y values")]
    LengthMismatch { xs: usize, ys: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// Target xi outside the admissible interval [xi(base), 1].
    #[error("target xi {target} outside admissible interval [{lower}, 1]")]
    TargetOutOfRange { target: f64, lower: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    /// A computed postcondition did not hold.
    #[error("postcondition failed: {0}")]
    Postcondition(String),
}

impl Error {
    pub(crate) fn invalid(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidCopula {
            invariant,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCopula { .. } => "invalid_copula",
            Error::DegenerateY => "degenerate_y",
            Error::SampleTooSmall { .. } => "sample_too_small",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::TargetOutOfRange { .. } => "target_out_of_range",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Postcondition(_) => "postcondition",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
