use thiserror::Error;

/// Errors raised by the array model, the estimators and the tracker.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two training beams carry no independent information about the direction.
    #[error("degenerate beam design: g and e are parallel")]
    DegenerateDesign,

    #[error("no feasible beam design on the offset grid")]
    NoFeasibleDesign,

    /// The Fisher matrix at the current estimate cannot be inverted.
    #[error("singular update: {0}")]
    SingularUpdate(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
