//! Multiplicative-weights updating of voting profiles.
//!
//! After each slot a committee member's profile is multiplied by `1 + δ` for a
//! correct vote, by `(1 - δ)^ℓ_r` for abstaining on (or rejecting) a valid
//! block and by `(1 - δ)^ℓ_a` for approving an invalid block, then clamped to
//! `[0.5, 1 - ε]`. The module also carries the closed-form analysis of which
//! long-run behaviour mixes sustain a profile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    clamp_profile, BlockValidity, Vote, VotingProfile, DEFAULT_CAP_MARGIN, PROFILE_FLOOR,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct UpdateParams<T> {
    pub delta: T,
    pub loss_reject_valid: T,
    pub loss_accept_invalid: T,
    /// Slots before which a validator cannot be suspended.
    pub grace_period: u64,
    /// Profiles are capped at `1 - cap_margin`.
    pub cap_margin: T,
    pub suspension_enabled: bool,
}

impl<T: Real> UpdateParams<T> {
    /// `δ = 10⁻³`, `ℓ_r = 10⁻²`, `ℓ_a = 12`, `ε = 10⁻⁵`, grace period 1,
    /// suspension off.
    pub fn protocol_defaults() -> Self {
        UpdateParams {
            delta: T::lit(1e-3),
            loss_reject_valid: T::lit(1e-2),
            loss_accept_invalid: T::lit(12.0),
            grace_period: 1,
            cap_margin: T::lit(DEFAULT_CAP_MARGIN),
            suspension_enabled: false,
        }
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::param(
                "delta",
                format!("{} not in (0, 1)", self.delta),
            ));
        }
        if !(self.loss_reject_valid > T::zero()) || !self.loss_reject_valid.is_finite() {
            return Err(Error::param("loss_reject_valid", "must be positive"));
        }
        if !(self.loss_accept_invalid > T::zero()) || !self.loss_accept_invalid.is_finite() {
            return Err(Error::param("loss_accept_invalid", "must be positive"));
        }
        if !(self.cap_margin > T::zero() && self.cap_margin < T::half()) {
            return Err(Error::param(
                "cap_margin",
                format!("{} not in (0, 0.5)", self.cap_margin),
            ));
        }
        Ok(())
    }
}

impl<T: Real> Default for UpdateParams<T> {
    fn default() -> Self {
        Self::protocol_defaults()
    }
}

/// How a single vote is judged against the block's ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteClassification {
    /// Approved a valid block or rejected an invalid one.
    Correct,
    /// Abstained on, or rejected, a valid block.
    AbstainedOrRejectedValid,
    ApprovedInvalid,
}

/// Classifies a vote by the (vote, validity) cell of the update table.
///
/// A `Reject` on an invalid block counts as correct whether or not it was an
/// abstention; the vote encoding cannot tell them apart.
pub fn classify(vote: Vote, validity: BlockValidity) -> VoteClassification {
    match (vote, validity) {
        (Vote::Approve, BlockValidity::Valid) | (Vote::Reject, BlockValidity::Invalid) => {
            VoteClassification::Correct
        }
        (Vote::Reject, BlockValidity::Valid) => VoteClassification::AbstainedOrRejectedValid,
        (Vote::Approve, BlockValidity::Invalid) => VoteClassification::ApprovedInvalid,
    }
}

/// Unclamped table update `p''`.
pub fn raw_update<T: Real>(p: T, cls: VoteClassification, params: &UpdateParams<T>) -> T {
    let one = T::one();
    match cls {
        VoteClassification::Correct => p * (one + params.delta),
        VoteClassification::AbstainedOrRejectedValid => {
            p * (one - params.delta).powf(params.loss_reject_valid)
        }
        VoteClassification::ApprovedInvalid => {
            p * (one - params.delta).powf(params.loss_accept_invalid)
        }
    }
}

/// Table update followed by `min(1 - ε, max(0.5, p''))`.
pub fn mwu_update<T: Real>(
    p: VotingProfile<T>,
    cls: VoteClassification,
    params: &UpdateParams<T>,
) -> VotingProfile<T> {
    clamp_profile(
        raw_update(p.value(), cls, params),
        T::lit(PROFILE_FLOOR),
        params.cap_margin,
    )
}

pub fn initialize_profile<T: Real>() -> VotingProfile<T> {
    VotingProfile::initial()
}

/// Whether a validator whose updated, not yet clamped, profile is `raw` gets
/// suspended at `slot`. The clamped value never drops below one half, so the
/// check necessarily looks at the raw value.
pub fn suspension_check<T: Real>(raw: T, slot: u64, params: &UpdateParams<T>) -> bool {
    params.suspension_enabled && slot >= params.grace_period && raw < T::lit(PROFILE_FLOOR)
}

/// Long-run behaviour of a validator: a fraction `q` of slots voted
/// correctly, a fraction `q1` of slots abstaining on valid blocks, and the
/// remaining `1 - q - q1` approving invalid blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMix<T> {
    pub q: T,
    pub q1: T,
}

impl<T: Real> BehaviorMix<T> {
    pub fn new(q: T, q1: T) -> Result<Self> {
        let mix = BehaviorMix { q, q1 };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.q) {
            return Err(Error::param("q", format!("{} not in [0, 1]", self.q)));
        }
        if !unit(self.q1) {
            return Err(Error::param("q1", format!("{} not in [0, 1]", self.q1)));
        }
        // allow a few ulps of slack so grid points like 0.35 + 0.65 pass
        if self.q + self.q1 > T::one() + T::epsilon() * T::lit(4.0) {
            return Err(Error::param(
                "q + q1",
                format!("{} exceeds 1", self.q + self.q1),
            ));
        }
        Ok(())
    }

    pub fn deviate_fraction(&self) -> T {
        T::zero().max(T::one() - self.q - self.q1)
    }

    /// Per-slot actions following this mix.
    pub fn schedule(&self, kind: ScheduleKind, len: usize, seed: u64) -> Vec<Action> {
        match kind {
            ScheduleKind::Periodic => {
                let mut s = PeriodicSchedule::new(self);
                (0..len).map(|_| s.next_action()).collect()
            }
            ScheduleKind::SeededRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..len)
                    .map(|_| self.action_for(rng.random::<f64>()))
                    .collect()
            }
        }
    }

    /// Action selected by a uniform draw `u` in `[0, 1)`.
    pub fn action_for(&self, u: f64) -> Action {
        let q = self.q.as_f64();
        if u < q {
            Action::Follow
        } else if u < q + self.q1.as_f64() {
            Action::Abstain
        } else {
            Action::Deviate
        }
    }
}

/// What a validator does in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Votes according to the block's validity.
    Follow,
    /// Casts no vote.
    Abstain,
    /// Votes against the block's validity: approves invalid blocks, rejects
    /// valid ones.
    Deviate,
}

impl Action {
    /// Classification under the behaviour-mix model, where abstentions happen
    /// on valid blocks and deviations on invalid ones.
    pub fn mix_classification(self) -> VoteClassification {
        match self {
            Action::Follow => VoteClassification::Correct,
            Action::Abstain => VoteClassification::AbstainedOrRejectedValid,
            Action::Deviate => VoteClassification::ApprovedInvalid,
        }
    }

    pub fn vote_on(self, validity: BlockValidity) -> Vote {
        match self {
            Action::Follow => validity.correct_vote(),
            Action::Abstain => Vote::Reject,
            Action::Deviate => match validity {
                BlockValidity::Valid => Vote::Reject,
                BlockValidity::Invalid => Vote::Approve,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Deterministic interleaving that keeps every action's running count
    /// within one of its target share.
    #[default]
    Periodic,
    /// Independent draws per slot from a seeded generator.
    SeededRandom,
}

/// Stateful generator behind [`ScheduleKind::Periodic`]: each step picks the
/// action with the largest deficit `share · (t + 1) - count`, ties going to
/// follow, then abstain, then deviate.
#[derive(Debug, Clone)]
pub struct PeriodicSchedule {
    shares: [f64; 3],
    counts: [u64; 3],
    step: u64,
}

impl PeriodicSchedule {
    pub fn new<T: Real>(mix: &BehaviorMix<T>) -> Self {
        PeriodicSchedule {
            shares: [
                mix.q.as_f64(),
                mix.q1.as_f64(),
                mix.deviate_fraction().as_f64(),
            ],
            counts: [0; 3],
            step: 0,
        }
    }

    pub fn next_action(&mut self) -> Action {
        self.step += 1;
        let t = self.step as f64;
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for k in 0..3 {
            let deficit = self.shares[k] * t - self.counts[k] as f64;
            if self.shares[k] > 0.0 && deficit > best_deficit {
                best = k;
                best_deficit = deficit;
            }
        }
        self.counts[best] += 1;
        [Action::Follow, Action::Abstain, Action::Deviate][best]
    }
}

/// Constants of the sustainability condition `q ≥ c₁ (1 - c₂ q₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceConstants<T> {
    pub c1: T,
    pub c2: T,
}

impl<T: Real> ToleranceConstants<T> {
    pub fn sustains(&self, mix: &BehaviorMix<T>) -> bool {
        mix.q >= self.c1 * (T::one() - self.c2 * mix.q1)
    }

    /// `(c₁ - c₁c₂) / (1 - c₁c₂)`: no mix with a smaller correct fraction
    /// sustains a profile, whatever its abstention share.
    pub fn minimum_correct_fraction(&self) -> T {
        let c12 = self.c1 * self.c2;
        (self.c1 - c12) / (T::one() - c12)
    }
}

/// `c₁ = (1 - ln(1+δ) / (ℓ_a ln(1-δ)))⁻¹` and `c₂ = 1 - ℓ_r/ℓ_a`.
pub fn tolerance_constants<T: Real>(params: &UpdateParams<T>) -> Result<ToleranceConstants<T>> {
    params.validate()?;
    if params.loss_reject_valid >= params.loss_accept_invalid {
        return Err(Error::LossOrdering {
            loss_reject_valid: params.loss_reject_valid.as_f64(),
            loss_accept_invalid: params.loss_accept_invalid.as_f64(),
        });
    }
    let one = T::one();
    let ratio = params.delta.ln_1p() / (params.loss_accept_invalid * (-params.delta).ln_1p());
    Ok(ToleranceConstants {
        c1: one / (one - ratio),
        c2: one - params.loss_reject_valid / params.loss_accept_invalid,
    })
}

/// Whether a validator following `mix` ends up at or above its starting
/// profile under unclamped updates.
pub fn sustains_profile<T: Real>(mix: &BehaviorMix<T>, params: &UpdateParams<T>) -> Result<bool> {
    mix.validate()?;
    Ok(tolerance_constants(params)?.sustains(mix))
}

pub fn minimum_correct_fraction<T: Real>(params: &UpdateParams<T>) -> Result<T> {
    Ok(tolerance_constants(params)?.minimum_correct_fraction())
}

/// Profiles after each entry of `schedule`, starting from `p0`.
pub fn run_trajectory<T: Real>(
    p0: VotingProfile<T>,
    schedule: &[VoteClassification],
    params: &UpdateParams<T>,
) -> Vec<VotingProfile<T>> {
    run_trajectory_with(p0, schedule, |_| *params)
}

/// As [`run_trajectory`] with per-slot parameters, for time-varying `δ_t`,
/// `ℓ_{r,t}` and `ℓ_{a,t}`.
pub fn run_trajectory_with<T: Real>(
    p0: VotingProfile<T>,
    schedule: &[VoteClassification],
    mut params_at: impl FnMut(usize) -> UpdateParams<T>,
) -> Vec<VotingProfile<T>> {
    let mut p = p0;
    schedule
        .iter()
        .enumerate()
        .map(|(t, &cls)| {
            p = mwu_update(p, cls, &params_at(t));
            p
        })
        .collect()
}
