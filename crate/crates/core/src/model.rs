//! Domain types shared by the rules, update and simulation modules.
//!
//! Everything here is an immutable value; constructors enforce the
//! invariants and nothing else.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower bound of every voting profile, and the value a new validator starts at.
pub const PROFILE_FLOOR: f64 = 0.5;

/// Default distance kept between a profile and 1. Keeps log-odds weights
/// finite (ln((1 - 1e-5) / 1e-5) is about 11.5).
pub const DEFAULT_CAP_MARGIN: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidatorId(pub u64);

impl fmt::Display for ValidatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Probability that a validator votes correctly, kept in `[0.5, 1 - ε]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct VotingProfile<T>(T);

impl<T: Real> VotingProfile<T> {
    /// Profile of a newly entering validator.
    pub fn initial() -> Self {
        VotingProfile(T::half())
    }

    /// Validates `value` against `[0.5, 1 - cap_margin]`.
    pub fn new(value: T, cap_margin: T) -> Result<Self> {
        let cap = T::one() - cap_margin;
        if !(value >= T::half() && value <= cap) {
            return Err(Error::ProfileOutOfRange {
                value: value.as_f64(),
                cap: cap.as_f64(),
            });
        }
        Ok(VotingProfile(value))
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Real> Default for VotingProfile<T> {
    fn default() -> Self {
        Self::initial()
    }
}

/// `min(1 - cap_margin, max(floor, raw))`.
///
/// Total on the reals; a NaN input lands on the floor.
pub fn clamp_profile<T: Real>(raw: T, floor: T, cap_margin: T) -> VotingProfile<T> {
    let cap = T::one() - cap_margin;
    VotingProfile(cap.min(floor.max(raw)))
}

/// Locked deposit. A validator with zero stake is inactive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Stake<T>(T);

impl<T: Real> Stake<T> {
    pub fn new(amount: T) -> Result<Self> {
        if !(amount >= T::zero()) || !amount.is_finite() {
            return Err(Error::param(
                "stake",
                format!("{amount} is not a finite non-negative amount"),
            ));
        }
        Ok(Stake(amount))
    }

    pub fn amount(self) -> T {
        self.0
    }

    pub fn is_active(self) -> bool {
        self.0 > T::zero()
    }
}

/// Prior probability of an invalid block and the two loss magnitudes of the
/// welfare table: `loss_reject_valid` for rejecting a valid block and
/// `loss_accept_invalid` for approving an invalid one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct WelfareParams<T> {
    pub alpha: T,
    pub loss_reject_valid: T,
    pub loss_accept_invalid: T,
}

impl<T: Real> Default for WelfareParams<T> {
    /// `α = 1/2`, `ℓ_r = 10⁻²`, `ℓ_a = 12`.
    fn default() -> Self {
        WelfareParams {
            alpha: T::half(),
            loss_reject_valid: T::lit(1e-2),
            loss_accept_invalid: T::lit(12.0),
        }
    }
}

impl<T: Real> WelfareParams<T> {
    pub fn new(alpha: T, loss_reject_valid: T, loss_accept_invalid: T) -> Result<Self> {
        let params = WelfareParams {
            alpha,
            loss_reject_valid,
            loss_accept_invalid,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::param(
                "alpha",
                format!("{} not in (0, 1)", self.alpha),
            ));
        }
        if !(self.loss_reject_valid > T::zero()) || !self.loss_reject_valid.is_finite() {
            return Err(Error::param(
                "loss_reject_valid",
                format!("{} must be positive", self.loss_reject_valid),
            ));
        }
        if !(self.loss_accept_invalid > T::zero()) || !self.loss_accept_invalid.is_finite() {
            return Err(Error::param(
                "loss_accept_invalid",
                format!("{} must be positive", self.loss_accept_invalid),
            ));
        }
        Ok(())
    }

    /// Non-fatal configuration concerns. The model assumes rejecting a valid
    /// block is much cheaper than approving an invalid one.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.loss_reject_valid >= self.loss_accept_invalid {
            out.push(format!(
                "loss_reject_valid ({}) >= loss_accept_invalid ({}); the update analysis assumes the former is much smaller",
                self.loss_reject_valid, self.loss_accept_invalid
            ));
        }
        out
    }

    /// `ln((1 - α) / α) + ln((1 + ℓ_r) / (1 + ℓ_a))`, the constant that shifts
    /// the optimal approval threshold away from simple majority.
    pub fn log_prior_bias(&self) -> T {
        let one = T::one();
        ((one - self.alpha) / self.alpha).ln()
            + ((one + self.loss_reject_valid) / (one + self.loss_accept_invalid)).ln()
    }
}

/// A single committee vote. `Reject` also stands for abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Approve,
    Reject,
}

impl Vote {
    pub fn from_sign(sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(Vote::Approve),
            -1 => Ok(Vote::Reject),
            other => Err(Error::param("vote", format!("{other} is not +1 or -1"))),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Vote::Approve => 1,
            Vote::Reject => -1,
        }
    }

    pub fn signed<T: Real>(self) -> T {
        match self {
            Vote::Approve => T::one(),
            Vote::Reject => -T::one(),
        }
    }

    pub fn is_approve(self) -> bool {
        self == Vote::Approve
    }
}

/// Ground-truth validity of a proposed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockValidity {
    Valid,
    Invalid,
}

impl BlockValidity {
    /// The vote a perfectly accurate validator casts on this block.
    pub fn correct_vote(self) -> Vote {
        match self {
            BlockValidity::Valid => Vote::Approve,
            BlockValidity::Invalid => Vote::Reject,
        }
    }

    pub fn sign(self) -> i8 {
        self.correct_vote().sign()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommitteeMember<T> {
    pub id: ValidatorId,
    pub profile: VotingProfile<T>,
    pub stake: Stake<T>,
}

/// Validators selected to vote in one slot, in voting order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Committee<T> {
    slot: u64,
    members: Vec<CommitteeMember<T>>,
}

impl<T: Real> Committee<T> {
    pub fn new(slot: u64, members: Vec<CommitteeMember<T>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyCommittee);
        }
        let mut seen = HashSet::with_capacity(members.len());
        for m in &members {
            if !seen.insert(m.id) {
                return Err(Error::DuplicateValidator(m.id.0));
            }
        }
        Ok(Committee { slot, members })
    }

    /// Builds a committee from raw `(id, profile, stake)` triples, validating
    /// every profile against `[0.5, 1 - cap_margin]`.
    pub fn from_raw(slot: u64, raw: &[(u64, T, T)], cap_margin: T) -> Result<Self> {
        let members = raw
            .iter()
            .map(|&(id, p, s)| {
                Ok(CommitteeMember {
                    id: ValidatorId(id),
                    profile: VotingProfile::new(p, cap_margin)?,
                    stake: Stake::new(s)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Committee::new(slot, members)
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[CommitteeMember<T>] {
        &self.members
    }

    pub fn ids(&self) -> Vec<ValidatorId> {
        self.members.iter().map(|m| m.id).collect()
    }

    pub fn profiles(&self) -> Vec<T> {
        self.members.iter().map(|m| m.profile.value()).collect()
    }
}

/// Committee votes for one slot, aligned with committee member order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct DecisionProfile {
    votes: Vec<Vote>,
}

impl DecisionProfile {
    pub fn new(votes: Vec<Vote>) -> Self {
        DecisionProfile { votes }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| Vote::from_sign(s))
            .collect::<Result<Vec<_>>>()
            .map(DecisionProfile::new)
    }

    /// Profile number `mask` in the enumeration of `{-1, +1}^n`: bit `i` set
    /// means member `i` approves.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        let votes = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    Vote::Approve
                } else {
                    Vote::Reject
                }
            })
            .collect();
        DecisionProfile { votes }
    }

    /// Inverse of [`DecisionProfile::from_mask`].
    pub fn mask(&self) -> u64 {
        self.votes
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_approve())
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn approvals(&self) -> usize {
        self.votes.iter().filter(|v| v.is_approve()).count()
    }

    /// `Σ x_i` with `x_i ∈ {-1, +1}`.
    pub fn signed_sum(&self) -> i64 {
        self.votes.iter().map(|v| v.sign() as i64).sum()
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.votes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: self.votes.len(),
            });
        }
        Ok(())
    }
}

/// Non-negative vote weights together with their sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector<T> {
    weights: Vec<T>,
    total: T,
}

impl<T: Real> WeightVector<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        for (index, &w) in weights.iter().enumerate() {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidWeight {
                    index,
                    weight: w.as_f64(),
                });
            }
        }
        let total = weights.iter().copied().sum();
        Ok(WeightVector { weights, total })
    }

    /// `n` equal unit weights; the weighted rule then counts heads.
    pub fn uniform(n: usize) -> Self {
        WeightVector {
            weights: vec![T::one(); n],
            total: T::from_usize(n).expect("committee size fits the scalar"),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<T> {
        self.weights
    }

    pub fn total(&self) -> T {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_normalized(&self, tolerance: T) -> bool {
        (self.total - T::one()).abs() <= tolerance
    }

    /// True when every weight equals the first one.
    pub fn is_uniform(&self) -> bool {
        match self.weights.first() {
            Some(&w0) => self.weights.iter().all(|&w| w == w0),
            None => true,
        }
    }
}

/// Approval quota in `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Quota<T>(T);

impl<T: Real> Quota<T> {
    pub fn new(value: T) -> Result<Self> {
        if !(value >= T::half() && value <= T::one()) {
            return Err(Error::QuotaOutOfRange(value.as_f64()));
        }
        Ok(Quota(value))
    }

    /// Clamps into `[0.5, 1]`. NaN maps to 0.5.
    pub fn clamped(value: T) -> Self {
        Quota(T::one().min(T::half().max(value)))
    }

    pub fn simple_majority() -> Self {
        Quota(T::half())
    }

    pub fn two_thirds() -> Self {
        Quota(T::two() / T::lit(3.0))
    }

    pub fn value(self) -> T {
        self.0
    }
}
