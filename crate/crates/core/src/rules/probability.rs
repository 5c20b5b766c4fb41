use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BlockValidity, WelfareParams};
use crate::rules::{DecisionRule, ENUMERATION_LIMIT, LOG_SPACE_THRESHOLD};
use crate::scalar::Real;

fn check_probabilities<T: Real>(profiles: &[T]) -> Result<()> {
    for &p in profiles {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::ProbabilityOutOfRange(p.as_f64()));
        }
    }
    Ok(())
}

/// Probability that the committee reaches the correct outcome on a block of
/// the given validity, assuming independent votes where member `i` is correct
/// with probability `profiles[i]`.
///
/// Exact: sums the likelihood of every decision profile in `{-1, +1}^n` on
/// which `rule` agrees with the block's validity.
pub fn consensus_probability_exact<T: Real>(
    profiles: &[T],
    rule: &DecisionRule<T>,
    conditioned_on: BlockValidity,
) -> Result<T> {
    let n = profiles.len();
    rule.check_size(n)?;
    check_probabilities(profiles)?;
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let want_approve = conditioned_on == BlockValidity::Valid;
    // For a valid block a correct member approves; for an invalid one a
    // correct member rejects. `p_approve[i]` is member i's approval chance.
    let p_approve: Vec<T> = profiles
        .iter()
        .map(|&p| if want_approve { p } else { T::one() - p })
        .collect();

    let log_space = n > LOG_SPACE_THRESHOLD;
    let (ln_approve, ln_reject): (Vec<T>, Vec<T>) = if log_space {
        p_approve
            .iter()
            .map(|&p| (p.ln(), (T::one() - p).ln()))
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };

    let mut total = T::zero();
    for mask in 0u64..(1u64 << n) {
        let approves = |i: usize| mask >> i & 1 == 1;
        if rule.approves_by(n, approves) != want_approve {
            continue;
        }
        let term = if log_space {
            (0..n)
                .map(|i| {
                    if approves(i) {
                        ln_approve[i]
                    } else {
                        ln_reject[i]
                    }
                })
                .fold(T::zero(), |a, b| a + b)
                .exp()
        } else {
            (0..n).fold(T::one(), |acc, i| {
                acc * if approves(i) {
                    p_approve[i]
                } else {
                    T::one() - p_approve[i]
                }
            })
        };
        total = total + term;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate<T> {
    pub probability: T,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub half_width_95: T,
    pub trials: u64,
}

/// Monte-Carlo estimate of [`consensus_probability_exact`] for committees of
/// any size.
///
/// Single stream: a ChaCha8 generator seeded with `seed` draws one uniform
/// per member per trial, in member order, so the estimate is a pure function
/// of the inputs.
pub fn consensus_probability_mc<T: Real>(
    profiles: &[T],
    rule: &DecisionRule<T>,
    conditioned_on: BlockValidity,
    trials: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = profiles.len();
    rule.check_size(n)?;
    check_probabilities(profiles)?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let want_approve = conditioned_on == BlockValidity::Valid;
    let correct: Vec<f64> = profiles.iter().map(|p| p.as_f64()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut approve = vec![false; n];
    let mut hits = 0u64;
    for _ in 0..trials {
        for (slot, &p) in approve.iter_mut().zip(&correct) {
            let is_correct = rng.random::<f64>() < p;
            *slot = is_correct == want_approve;
        }
        if rule.approves_by(n, |i| approve[i]) == want_approve {
            hits += 1;
        }
    }
    let estimate = hits as f64 / trials as f64;
    let half_width = 1.96 * (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(McEstimate {
        probability: T::lit(estimate),
        half_width_95: T::lit(half_width),
        trials,
    })
}

/// Expected collective welfare of `rule`, constant terms omitted:
/// `(1-α)(1+ℓ_r) π_valid + α(1+ℓ_a) π_invalid`.
pub fn expected_welfare<T: Real>(
    profiles: &[T],
    rule: &DecisionRule<T>,
    params: &WelfareParams<T>,
) -> Result<T> {
    params.validate()?;
    let one = T::one();
    let on_valid = consensus_probability_exact(profiles, rule, BlockValidity::Valid)?;
    let on_invalid = consensus_probability_exact(profiles, rule, BlockValidity::Invalid)?;
    Ok(
        (one - params.alpha) * (one + params.loss_reject_valid) * on_valid
            + params.alpha * (one + params.loss_accept_invalid) * on_invalid,
    )
}
