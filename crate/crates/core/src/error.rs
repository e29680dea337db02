use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    Empty,
    #[error("times has {times} entries but events has {events}")]
    LengthMismatch { times: usize, events: usize },
    #[error("negative time {value} at index {index}")]
    NegativeTime { index: usize, value: f64 },
    #[error("event indicator {value} at index {index} is not 0 or 1")]
    NonBinaryEvent { index: usize, value: i64 },
    #[error("non-finite time at index {index}")]
    NaNOrInfinite { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A weighted mean in a statistic has an empty (zero) denominator.
    #[error("degenerate Kaplan-Meier weights in group {group}")]
    DegenerateWeights { group: usize },
    #[error("no events in the pooled sample")]
    NoEvents,
    #[error("weighted log-rank variance is zero")]
    ZeroVariance,
    #[error("variance process A(tau) is zero")]
    DegenerateVariance,
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

impl Error {
    /// True for errors that come from the data making a statistic undefined
    /// (as opposed to malformed input).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWeights { .. }
                | Error::NoEvents
                | Error::ZeroVariance
                | Error::DegenerateVariance
        )
    }
}
