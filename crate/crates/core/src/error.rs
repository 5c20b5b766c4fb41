use thiserror::Error;

/// Errors raised by the voting, update and simulation routines.
///
/// Offending values are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty committee")]
    EmptyCommittee,

    #[error("length mismatch: expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("profile out of open unit interval: {0}")]
    ProfileOutOfUnitInterval(f64),

    #[error("voting profile {value} outside [0.5, {cap}]")]
    ProfileOutOfRange { value: f64, cap: f64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("negative or non-finite weight {weight} at position {index}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("weights are not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("degenerate committee: total weight is zero")]
    DegenerateCommittee,

    #[error("quota {0} outside [0.5, 1]")]
    QuotaOutOfRange(f64),

    #[error("committee of {n} exceeds the exact enumeration limit of {limit}; use the Monte-Carlo estimator")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("loss for rejecting a valid block ({loss_reject_valid}) must be smaller than the loss for approving an invalid one ({loss_accept_invalid})")]
    LossOrdering {
        loss_reject_valid: f64,
        loss_accept_invalid: f64,
    },

    #[error("duplicate validator id {0}")]
    DuplicateValidator(u64),

    #[error("insufficient active validators: need {needed}, have {available}")]
    InsufficientValidators { needed: usize, available: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
