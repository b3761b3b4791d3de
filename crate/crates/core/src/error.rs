use thiserror::Error;

/// Errors raised by the analysis, bound and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The model has a symbol (or cycle) of probability one, so no cylinder decay rate exists.
    #[error("no positive decay rate: {0}")]
    NoPositiveRate(String),

    #[error("cannot condition on a null cylinder: {0}")]
    Conditioning(String),

    #[error(
        "horizon N = {horizon:.3e} exceeds the cap {cap}; use a shorter word or a smaller t \
         (or raise RECLAB_MAX_HORIZON)"
    )]
    HorizonTooLarge { horizon: f64, cap: u64 },

    #[error("hypothesis failed: {hypothesis} (value {value}, threshold {threshold})")]
    HypothesisFailed {
        hypothesis: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("wrong model: {0}")]
    WrongModel(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for the errors caused by a size cap (horizon or enumeration).
    pub fn is_cap_error(&self) -> bool {
        matches!(self, Error::HorizonTooLarge { .. } | Error::TooLarge(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
