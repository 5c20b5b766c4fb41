use crate::error::{Error, Result};
use crate::model::{DecisionProfile, Quota, WeightVector, WelfareParams};
use crate::rules::decision::signed_weight_sum;
use crate::rules::ConsensusOutcome;
use crate::scalar::Real;

/// Log-odds weight `ln(p / (1 - p))` of a validator with profile `p`.
///
/// Non-negative for `p ≥ 0.5`, strictly increasing, and antisymmetric about
/// one half.
pub fn optimal_weight<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::ProfileOutOfUnitInterval(p.as_f64()));
    }
    // ln(1 - p) through ln_1p keeps precision for profiles near the cap.
    Ok(p.ln() - (-p).ln_1p())
}

/// Log-odds weights for a whole committee.
///
/// Profiles below one half would get negative weights; they are rejected
/// here because [`WeightVector`] only holds non-negative entries.
pub fn optimal_weights<T: Real>(profiles: &[T]) -> Result<WeightVector<T>> {
    if profiles.is_empty() {
        return Err(Error::EmptyCommittee);
    }
    let weights = profiles
        .iter()
        .map(|&p| optimal_weight(p))
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(weights)
}

/// Rescales weights to sum to one.
pub fn normalize_weights<T: Real>(w: &WeightVector<T>) -> Result<WeightVector<T>> {
    let total = w.total();
    if !(total > T::zero()) {
        return Err(Error::DegenerateCommittee);
    }
    WeightVector::new(w.as_slice().iter().map(|&wi| wi / total).collect())
}

/// Welfare-optimal quota before clamping:
/// `½ [1 - (ln((1-α)/α) + ln((1+ℓ_r)/(1+ℓ_a))) / Σ w_i]`.
pub fn optimal_quota_unclamped<T: Real>(
    w: &WeightVector<T>,
    params: &WelfareParams<T>,
) -> Result<T> {
    let total = w.total();
    if !(total > T::zero()) {
        return Err(Error::DegenerateCommittee);
    }
    Ok(T::half() * (T::one() - params.log_prior_bias() / total))
}

/// Welfare-optimal quota clamped to `[0.5, 1]`.
pub fn optimal_quota<T: Real>(w: &WeightVector<T>, params: &WelfareParams<T>) -> Result<Quota<T>> {
    optimal_quota_unclamped(w, params).map(Quota::clamped)
}

/// The welfare-maximizing weighted majority rule for one committee.
///
/// Decides with the unclamped optimal quota. Written out, the approval
/// condition `Σ w_i x_i ≥ (2q̄ - 1) Σ w_i` has the right-hand side
/// `-(ln((1-α)/α) + ln((1+ℓ_r)/(1+ℓ_a)))`, which stays defined when every
/// weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalRule<T> {
    weights: WeightVector<T>,
    threshold: T,
}

impl<T: Real> OptimalRule<T> {
    pub fn new(profiles: &[T], params: &WelfareParams<T>) -> Result<Self> {
        params.validate()?;
        let weights = optimal_weights(profiles)?;
        Ok(OptimalRule {
            weights,
            threshold: -params.log_prior_bias(),
        })
    }

    /// Raw log-odds weights.
    pub fn weights(&self) -> &WeightVector<T> {
        &self.weights
    }

    /// `(2q̄ - 1) Σ w_i`, the bar the signed weight sum has to reach.
    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn quota_unclamped(&self) -> Result<T> {
        let total = self.weights.total();
        if !(total > T::zero()) {
            return Err(Error::DegenerateCommittee);
        }
        Ok(T::half() * (T::one() + self.threshold / total))
    }

    pub fn quota(&self) -> Result<Quota<T>> {
        self.quota_unclamped().map(Quota::clamped)
    }

    pub fn normalized_weights(&self) -> Result<WeightVector<T>> {
        normalize_weights(&self.weights)
    }

    /// `Σ w_i x_i - threshold`; non-negative means approve.
    pub fn margin(&self, profile: &DecisionProfile) -> Result<T> {
        profile.check_len(self.weights.len())?;
        let votes = profile.votes();
        Ok(signed_weight_sum(self.weights.as_slice(), |i| votes[i].is_approve()) - self.threshold)
    }

    pub fn decide(&self, profile: &DecisionProfile) -> Result<ConsensusOutcome> {
        self.margin(profile)
            .map(|m| ConsensusOutcome::from_approval(m >= T::zero()))
    }

    pub(crate) fn approves_by(&self, approves: impl Fn(usize) -> bool) -> bool {
        signed_weight_sum(self.weights.as_slice(), approves) >= self.threshold
    }
}
