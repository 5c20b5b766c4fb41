use crate::error::{Error, Result};
use crate::model::{DecisionProfile, WelfareParams};
use crate::rules::{ConsensusOutcome, OptimalRule, ENUMERATION_LIMIT, LOG_SPACE_THRESHOLD};
use crate::scalar::Real;

/// Relative gap under which the two sides of the per-profile welfare
/// comparison are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Welfare-optimal decision for every profile in `{-1, +1}^n`, found by
/// comparing, profile by profile, the welfare contribution of approving
/// against that of rejecting.
///
/// Indexed by [`DecisionProfile::mask`].
#[derive(Debug, Clone)]
pub struct OracleRule<T> {
    n: usize,
    log_domain: bool,
    accept: Vec<T>,
    reject: Vec<T>,
}

impl<T: Real> OracleRule<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    fn index(&self, profile: &DecisionProfile) -> Result<usize> {
        profile.check_len(self.n)?;
        Ok(profile.mask() as usize)
    }

    /// Approves iff approving contributes strictly more welfare.
    pub fn approves_mask(&self, mask: u64) -> bool {
        let i = mask as usize;
        self.accept[i] > self.reject[i]
    }

    pub fn outcome(&self, profile: &DecisionProfile) -> Result<ConsensusOutcome> {
        let i = self.index(profile)?;
        Ok(ConsensusOutcome::from_approval(
            self.approves_mask(i as u64),
        ))
    }

    /// `(accept - reject) / max(accept, reject)`.
    pub fn relative_gap_mask(&self, mask: u64) -> T {
        let i = mask as usize;
        let (a, r) = (self.accept[i], self.reject[i]);
        if self.log_domain {
            let d = a - r;
            d.signum() * (T::one() - (-d.abs()).exp())
        } else {
            let m = a.max(r);
            if m > T::zero() {
                (a - r) / m
            } else {
                T::zero()
            }
        }
    }

    pub fn is_tie_mask(&self, mask: u64) -> bool {
        self.relative_gap_mask(mask).abs() <= T::lit(TIE_TOLERANCE)
    }

    pub fn is_tie(&self, profile: &DecisionProfile) -> Result<bool> {
        let i = self.index(profile)?;
        Ok(self.is_tie_mask(i as u64))
    }

    /// Profiles the oracle approves, in enumeration order.
    pub fn approved(&self) -> impl Iterator<Item = DecisionProfile> + '_ {
        (0..self.accept.len() as u64)
            .filter(|&m| self.approves_mask(m))
            .map(|m| DecisionProfile::from_mask(self.n, m))
    }
}

/// Builds the per-profile optimal decision map. Products are taken directly
/// up to twelve members and as sums of logarithms beyond that.
pub fn oracle_optimal_rule<T: Real>(
    profiles: &[T],
    params: &WelfareParams<T>,
) -> Result<OracleRule<T>> {
    params.validate()?;
    let n = profiles.len();
    if n == 0 {
        return Err(Error::EmptyCommittee);
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    for &p in profiles {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::ProfileOutOfUnitInterval(p.as_f64()));
        }
    }
    let one = T::one();
    let accept_scale = (one - params.alpha) * (one + params.loss_reject_valid);
    let reject_scale = params.alpha * (one + params.loss_accept_invalid);
    let log_domain = n > LOG_SPACE_THRESHOLD;
    let size = 1usize << n;
    let mut accept = Vec::with_capacity(size);
    let mut reject = Vec::with_capacity(size);

    for mask in 0..size as u64 {
        let approves = |i: usize| mask >> i & 1 == 1;
        if log_domain {
            let (mut a, mut r) = (accept_scale.ln(), reject_scale.ln());
            for (i, &p) in profiles.iter().enumerate() {
                let (right, wrong) = (p.ln(), (one - p).ln());
                if approves(i) {
                    a = a + right;
                    r = r + wrong;
                } else {
                    a = a + wrong;
                    r = r + right;
                }
            }
            accept.push(a);
            reject.push(r);
        } else {
            let (mut a, mut r) = (accept_scale, reject_scale);
            for (i, &p) in profiles.iter().enumerate() {
                if approves(i) {
                    a = a * p;
                    r = r * (one - p);
                } else {
                    a = a * (one - p);
                    r = r * p;
                }
            }
            accept.push(a);
            reject.push(r);
        }
    }
    Ok(OracleRule {
        n,
        log_domain,
        accept,
        reject,
    })
}

/// Checks that the log-odds weighted rule with the optimal quota agrees with
/// the per-profile oracle on every decision profile. Profiles where the
/// oracle sees a tie accept either outcome.
pub fn verify_theorem1<T: Real>(profiles: &[T], params: &WelfareParams<T>) -> Result<bool> {
    let oracle = oracle_optimal_rule(profiles, params)?;
    let rule = OptimalRule::new(profiles, params)?;
    let n = profiles.len();
    Ok((0..1u64 << n).all(|mask| {
        let weighted = rule.approves_by(|i| mask >> i & 1 == 1);
        weighted == oracle.approves_mask(mask) || oracle.is_tie_mask(mask)
    }))
}
