//! Weighted majority voting for proof-of-stake committees.
//!
//! * [`model`]: validators, profiles, votes, committees, weights and quotas.
//! * [`rules`]: majority and weighted-majority decisions, the welfare-optimal
//!   log-odds weights and quota, consensus probabilities and a brute-force
//!   optimality oracle.
//! * [`mwu`]: multiplicative-weights profile updates and the tolerance
//!   analysis of behaviour mixes.
//! * [`sim`]: a slot-by-slot consensus simulator built on the above.
//!
//! The mathematics is generic over [`Real`] (`f32` or `f64`); the simulator
//! runs on `f64`. Concrete aliases for both widths are exported below.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod mwu;
pub mod rules;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    clamp_profile, BlockValidity, Committee, CommitteeMember, DecisionProfile, Quota, Stake,
    ValidatorId, Vote, VotingProfile, WeightVector, WelfareParams, DEFAULT_CAP_MARGIN,
    PROFILE_FLOOR,
};
pub use mwu::{
    classify, initialize_profile, minimum_correct_fraction, mwu_update, raw_update, run_trajectory,
    run_trajectory_with, suspension_check, sustains_profile, tolerance_constants, Action,
    BehaviorMix, PeriodicSchedule, ScheduleKind, ToleranceConstants, UpdateParams,
    VoteClassification,
};
pub use rules::{
    consensus_probability_exact, consensus_probability_mc, expected_welfare, normalize_weights,
    optimal_quota, optimal_quota_unclamped, optimal_weight, optimal_weights, oracle_optimal_rule,
    reduced_decision, unweighted_decision, verify_theorem1, weighted_approval_fraction,
    weighted_decision, ConsensusOutcome, DecisionRule, McEstimate, OptimalRule, OracleRule,
};
pub use scalar::Real;

pub type VotingProfileF64 = VotingProfile<f64>;
pub type StakeF64 = Stake<f64>;
pub type QuotaF64 = Quota<f64>;
pub type WeightVectorF64 = WeightVector<f64>;
pub type WelfareParamsF64 = WelfareParams<f64>;
pub type CommitteeF64 = Committee<f64>;
pub type DecisionRuleF64 = DecisionRule<f64>;
pub type OptimalRuleF64 = OptimalRule<f64>;
pub type UpdateParamsF64 = UpdateParams<f64>;
pub type BehaviorMixF64 = BehaviorMix<f64>;

pub type VotingProfileF32 = VotingProfile<f32>;
pub type StakeF32 = Stake<f32>;
pub type QuotaF32 = Quota<f32>;
pub type WeightVectorF32 = WeightVector<f32>;
pub type WelfareParamsF32 = WelfareParams<f32>;
pub type CommitteeF32 = Committee<f32>;
pub type DecisionRuleF32 = DecisionRule<f32>;
pub type OptimalRuleF32 = OptimalRule<f32>;
pub type UpdateParamsF32 = UpdateParams<f32>;
pub type BehaviorMixF32 = BehaviorMix<f32>;
