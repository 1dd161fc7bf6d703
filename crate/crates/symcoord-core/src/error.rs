//! Error type shared across the library.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("labels and weights have different lengths")]
    LengthMismatch,
    #[error("weight at index {index} is negative")]
    NegativeWeight { index: usize },
    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("evidence has probability zero under the prior")]
    EvidenceImpossible,
    #[error("{what} requires {needed} nodes, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u64,
        budget: u64,
    },
    #[error("kernel row {row} sums to {sum}, not 1")]
    KernelRowNotNormalized { row: String, sum: String },
    #[error("declared flag `{flag}` contradicts the kernels")]
    InconsistentFlag { flag: &'static str },
    #[error("model does not satisfy `{required}`")]
    FlagViolation { required: &'static str },
    #[error("aggregate-action structure requires an aggregate map")]
    MissingAggregate,
    #[error("information realization at t={t} is not reachable")]
    UnreachableInfoRealization { t: usize },
    #[error("full-local-history solving is capped at horizon {cap}")]
    HorizonCapExceeded { cap: usize },
    #[error("cannot parse `{text}` as a scalar")]
    BadScalar { text: String },
    #[error("model is malformed: {reason}")]
    Malformed { reason: String },
    #[error("belief filter disagrees with the trajectory oracle at t={t}: {reason}")]
    OracleMismatch { t: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;
