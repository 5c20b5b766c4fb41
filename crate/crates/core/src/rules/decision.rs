use crate::error::{Error, Result};
use crate::model::{DecisionProfile, Quota, WeightVector};
use crate::rules::{ConsensusOutcome, NORMALIZATION_TOLERANCE};
use crate::scalar::Real;

/// Enhanced majority: approve iff `Σ x_i ≥ (2q - 1) n`.
pub fn unweighted_decision<T: Real>(
    profile: &DecisionProfile,
    q: Quota<T>,
) -> Result<ConsensusOutcome> {
    if profile.is_empty() {
        return Err(Error::EmptyCommittee);
    }
    Ok(ConsensusOutcome::from_approval(count_approves(
        profile.len(),
        profile.approvals(),
        q,
    )))
}

pub(crate) fn count_approves<T: Real>(n: usize, approvals: usize, q: Quota<T>) -> bool {
    let sum = T::from_i64(2 * approvals as i64 - n as i64).expect("vote sum fits the scalar");
    let n = T::from_usize(n).expect("committee size fits the scalar");
    sum >= (T::two() * q.value() - T::one()) * n
}

/// Weighted majority: approve iff `Σ w_i x_i ≥ (2q̄ - 1) Σ w_i`.
///
/// Ties approve. With all weights equal and positive the decision is taken
/// by counting, so it coincides exactly with [`unweighted_decision`].
pub fn weighted_decision<T: Real>(
    profile: &DecisionProfile,
    weights: &WeightVector<T>,
    qbar: Quota<T>,
) -> Result<ConsensusOutcome> {
    profile.check_len(weights.len())?;
    if profile.is_empty() {
        return Err(Error::EmptyCommittee);
    }
    let votes = profile.votes();
    Ok(ConsensusOutcome::from_approval(weighted_approves(
        weights,
        qbar,
        |i| votes[i].is_approve(),
    )))
}

pub(crate) fn weighted_approves<T: Real>(
    weights: &WeightVector<T>,
    qbar: Quota<T>,
    approves: impl Fn(usize) -> bool,
) -> bool {
    let w = weights.as_slice();
    if weights.is_uniform() && w[0] > T::zero() {
        let approvals = (0..w.len()).filter(|&i| approves(i)).count();
        return count_approves(w.len(), approvals, qbar);
    }
    let threshold = (T::two() * qbar.value() - T::one()) * weights.total();
    signed_weight_sum(w, approves) >= threshold
}

pub(crate) fn signed_weight_sum<T: Real>(w: &[T], approves: impl Fn(usize) -> bool) -> T {
    w.iter().enumerate().fold(
        T::zero(),
        |acc, (i, &wi)| if approves(i) { acc + wi } else { acc - wi },
    )
}

/// Normalized form of the weighted rule: with `Σ w'_i = 1` and
/// `y_i = (x_i + 1) / 2`, approve iff `Σ w'_i y_i ≥ q̄`.
pub fn reduced_decision<T: Real>(
    profile: &DecisionProfile,
    normalized: &WeightVector<T>,
    qbar: Quota<T>,
) -> Result<ConsensusOutcome> {
    profile.check_len(normalized.len())?;
    if profile.is_empty() {
        return Err(Error::EmptyCommittee);
    }
    if !normalized.is_normalized(T::lit(NORMALIZATION_TOLERANCE)) {
        return Err(Error::NotNormalized(normalized.total().as_f64()));
    }
    let approving: T = profile
        .votes()
        .iter()
        .zip(normalized.as_slice())
        .filter(|(v, _)| v.is_approve())
        .map(|(_, &w)| w)
        .sum();
    Ok(ConsensusOutcome::from_approval(approving >= qbar.value()))
}

/// Share of the total weight carried by approving members.
pub fn weighted_approval_fraction<T: Real>(
    profile: &DecisionProfile,
    weights: &WeightVector<T>,
) -> Result<T> {
    profile.check_len(weights.len())?;
    if weights.total() <= T::zero() {
        return Err(Error::DegenerateCommittee);
    }
    let approving: T = profile
        .votes()
        .iter()
        .zip(weights.as_slice())
        .filter(|(v, _)| v.is_approve())
        .map(|(_, &w)| w)
        .sum();
    Ok(approving / weights.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConsensusOutcome::{Approve, Reject};

    fn x(signs: &[i8]) -> DecisionProfile {
        DecisionProfile::from_signs(signs).unwrap()
    }

    fn q(v: f64) -> Quota<f64> {
        Quota::new(v).unwrap()
    }

    #[test]
    fn unweighted_examples() {
        let two_thirds = Quota::<f64>::two_thirds();
        assert_eq!(
            unweighted_decision(&x(&[1, 1, 1, 1, -1]), two_thirds).unwrap(),
            Approve
        );
        assert_eq!(
            unweighted_decision(&x(&[1, 1, 1, -1, -1]), two_thirds).unwrap(),
            Reject
        );
        for quota in [0.5, 0.6, 2.0 / 3.0, 0.75, 1.0] {
            assert_eq!(unweighted_decision(&x(&[1; 7]), q(quota)).unwrap(), Approve);
        }
        assert_eq!(
            unweighted_decision(&x(&[]), two_thirds),
            Err(Error::EmptyCommittee)
        );
    }

    #[test]
    fn unweighted_boundary_approves() {
        // 2 of 4 at simple majority: Σx = 0 = (2·0.5 - 1)·4
        assert_eq!(
            unweighted_decision(&x(&[1, 1, -1, -1]), q(0.5)).unwrap(),
            Approve
        );
        assert_eq!(
            unweighted_decision(&x(&[1, -1, -1, -1]), q(0.5)).unwrap(),
            Reject
        );
    }

    #[test]
    fn weighted_examples_from_table() {
        let w = WeightVector::new(vec![0.392, 0.392, 0.072, 0.072, 0.072]).unwrap();
        let half = Quota::simple_majority();
        assert_eq!(
            weighted_decision(&x(&[1, 1, -1, -1, -1]), &w, half).unwrap(),
            Approve
        );
        assert_eq!(
            weighted_decision(&x(&[1, -1, 1, 1, -1]), &w, half).unwrap(),
            Approve
        );
        assert_eq!(
            weighted_decision(&x(&[1, -1, 1, -1, -1]), &w, half).unwrap(),
            Reject
        );

        let equal = WeightVector::new(vec![0.2; 5]).unwrap();
        assert_eq!(
            weighted_decision(&x(&[1, 1, 1, 1, -1]), &equal, Quota::two_thirds()).unwrap(),
            Approve
        );
    }

    #[test]
    fn weighted_length_mismatch() {
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            weighted_decision(&x(&[1, 1, 1]), &w, Quota::simple_majority()),
            Err(Error::LengthMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn reduced_examples() {
        let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(
            reduced_decision(&x(&[1, 1, 1]), &w, q(1.0)).unwrap(),
            Approve
        );
        assert_eq!(
            reduced_decision(&x(&[-1, -1, -1]), &w, q(0.5)).unwrap(),
            Reject
        );

        let committee1 = vec![
            0.376,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
            0.624 / 9.0,
        ];
        let w1 = WeightVector::new(committee1).unwrap();
        let only_first = x(&[1, -1, -1, -1, -1, -1, -1, -1, -1, -1]);
        assert_eq!(
            reduced_decision(&only_first, &w1, q(0.604)).unwrap(),
            Reject
        );

        let unnormalized = WeightVector::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            reduced_decision(&x(&[1, 1]), &unnormalized, q(0.5)),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn approval_fraction() {
        let w = WeightVector::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(weighted_approval_fraction(&x(&[1, -1]), &w).unwrap(), 0.75);
        let zero = WeightVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(
            weighted_approval_fraction(&x(&[1, -1]), &zero),
            Err(Error::DegenerateCommittee)
        );
    }
}
