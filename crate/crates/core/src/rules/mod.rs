//! Voting-rule mathematics.
//!
//! Majority and weighted-majority decisions, the welfare-optimal log-odds
//! weights and quota, consensus probabilities (exact enumeration and
//! Monte-Carlo), expected welfare, and a brute-force per-profile oracle that
//! certifies the optimal weighted rule.

mod decision;
mod optimal;
mod oracle;
mod probability;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DecisionProfile, Quota, WeightVector, WelfareParams};
use crate::scalar::Real;

pub use decision::{
    reduced_decision, unweighted_decision, weighted_approval_fraction, weighted_decision,
};
pub use optimal::{
    normalize_weights, optimal_quota, optimal_quota_unclamped, optimal_weight, optimal_weights,
    OptimalRule,
};
pub use oracle::{oracle_optimal_rule, verify_theorem1, OracleRule, TIE_TOLERANCE};
pub use probability::{
    consensus_probability_exact, consensus_probability_mc, expected_welfare, McEstimate,
};

/// Largest committee for which exact enumeration over `2^n` decision
/// profiles is attempted.
pub const ENUMERATION_LIMIT: usize = 20;

/// Committees above this size accumulate per-profile probabilities in log
/// space during enumeration.
pub const LOG_SPACE_THRESHOLD: usize = 12;

/// Tolerance used to decide whether a weight vector sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusOutcome {
    Approve,
    Reject,
}

impl ConsensusOutcome {
    pub fn from_approval(approve: bool) -> Self {
        if approve {
            ConsensusOutcome::Approve
        } else {
            ConsensusOutcome::Reject
        }
    }

    pub fn is_approve(self) -> bool {
        self == ConsensusOutcome::Approve
    }

    pub fn sign(self) -> i8 {
        if self.is_approve() {
            1
        } else {
            -1
        }
    }
}

/// A decision rule applied to one committee.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule<T> {
    /// Approve when at least a fraction `q` of members approve.
    Unweighted(Quota<T>),
    /// Weighted majority with an operational quota in `[0.5, 1]`.
    Weighted {
        weights: WeightVector<T>,
        quota: Quota<T>,
    },
    /// The welfare-maximizing rule: log-odds weights with the unclamped
    /// optimal quota.
    Optimal(OptimalRule<T>),
}

impl<T: Real> DecisionRule<T> {
    pub fn unweighted(quota: Quota<T>) -> Self {
        DecisionRule::Unweighted(quota)
    }

    pub fn weighted(weights: WeightVector<T>, quota: Quota<T>) -> Self {
        DecisionRule::Weighted { weights, quota }
    }

    /// Welfare-optimal rule for `profiles` under `params`.
    pub fn optimal(profiles: &[T], params: &WelfareParams<T>) -> Result<Self> {
        OptimalRule::new(profiles, params).map(DecisionRule::Optimal)
    }

    /// Committee size the rule is bound to, if any.
    pub fn committee_size(&self) -> Option<usize> {
        match self {
            DecisionRule::Unweighted(_) => None,
            DecisionRule::Weighted { weights, .. } => Some(weights.len()),
            DecisionRule::Optimal(rule) => Some(rule.weights().len()),
        }
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptyCommittee);
        }
        match self.committee_size() {
            Some(m) if m != n => Err(Error::LengthMismatch {
                expected: m,
                found: n,
            }),
            _ => Ok(()),
        }
    }

    pub fn decide(&self, profile: &DecisionProfile) -> Result<ConsensusOutcome> {
        match self {
            DecisionRule::Unweighted(q) => unweighted_decision(profile, *q),
            DecisionRule::Weighted { weights, quota } => {
                weighted_decision(profile, weights, *quota)
            }
            DecisionRule::Optimal(rule) => rule.decide(profile),
        }
    }

    /// Decision for a committee of `n` where `approves(i)` tells whether
    /// member `i` voted +1. Same arithmetic as [`DecisionRule::decide`]
    /// without materializing a [`DecisionProfile`]; the caller guarantees
    /// `n` matches the rule.
    pub(crate) fn approves_by(&self, n: usize, approves: impl Fn(usize) -> bool) -> bool {
        match self {
            DecisionRule::Unweighted(q) => {
                decision::count_approves(n, (0..n).filter(|&i| approves(i)).count(), *q)
            }
            DecisionRule::Weighted { weights, quota } => {
                decision::weighted_approves(weights, *quota, approves)
            }
            DecisionRule::Optimal(rule) => rule.approves_by(approves),
        }
    }
}
