use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    clamp_profile, BlockValidity, Committee, CommitteeMember, DecisionProfile, Quota, Stake,
    ValidatorId, VotingProfile, WeightVector, PROFILE_FLOOR,
};
use crate::mwu::{
    classify, raw_update, suspension_check, Action, PeriodicSchedule, ScheduleKind,
    VoteClassification,
};
use crate::rules::{
    normalize_weights, optimal_quota, optimal_weights, unweighted_decision,
    weighted_approval_fraction, weighted_decision, ConsensusOutcome,
};
use crate::sim::config::{
    BehaviorPolicy, CommitteeMode, QuotaPolicy, ScenarioConfig, ValidityPolicy,
};

/// Weighted approval a fixed-quota run has to reach to count as recovered.
pub const RECOVERY_THRESHOLD: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidatorStatus {
    Active,
    Suspended,
}

#[derive(Debug, Clone)]
pub struct ValidatorState {
    pub id: ValidatorId,
    pub stake: Stake<f64>,
    pub profile: VotingProfile<f64>,
    pub status: ValidatorStatus,
    pub behavior: BehaviorPolicy,
    schedule: Option<PeriodicSchedule>,
}

impl ValidatorState {
    pub fn new(
        id: ValidatorId,
        stake: Stake<f64>,
        profile: VotingProfile<f64>,
        behavior: BehaviorPolicy,
    ) -> Self {
        let schedule = match behavior {
            BehaviorPolicy::Mixed {
                schedule: ScheduleKind::Periodic,
                ..
            } => behavior.mix().map(|m| PeriodicSchedule::new(&m)),
            _ => None,
        };
        ValidatorState {
            id,
            stake,
            profile,
            status: ValidatorStatus::Active,
            behavior,
            schedule,
        }
    }

    /// Eligible for committee selection.
    pub fn is_active(&self) -> bool {
        self.status == ValidatorStatus::Active && self.stake.is_active()
    }

    /// This validator's action in the current slot. Periodic mixes advance
    /// once per slot served; random mixes take one draw from `rng`.
    fn next_action(&mut self, rng: &mut impl Rng) -> Action {
        match self.behavior {
            BehaviorPolicy::Honest => Action::Follow,
            BehaviorPolicy::Blocked => Action::Abstain,
            BehaviorPolicy::Mixed { q, q1, schedule } => match (schedule, self.schedule.as_mut()) {
                (ScheduleKind::Periodic, Some(s)) => s.next_action(),
                _ => crate::mwu::BehaviorMix { q, q1 }.action_for(rng.random::<f64>()),
            },
        }
    }
}

/// Independent generator streams within one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Committee = 1,
    Proposal = 2,
    Votes = 3,
}

pub fn substream(seed: u64, slot: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot.wrapping_mul(8).wrapping_add(purpose as u64));
    rng
}

/// Draws `n` distinct active validators, each draw proportional to stake
/// among those not yet drawn. Returns every active validator, in population
/// order, when `n` equals their number.
pub fn select_committee(
    validators: &[ValidatorState],
    n: usize,
    slot: u64,
    rng: &mut impl Rng,
) -> Result<Committee<f64>> {
    let picked = select_indices(validators, n, rng)?;
    let members = picked
        .into_iter()
        .map(|i| {
            let v = &validators[i];
            CommitteeMember {
                id: v.id,
                profile: v.profile,
                stake: v.stake,
            }
        })
        .collect();
    Committee::new(slot, members)
}

fn select_indices(
    validators: &[ValidatorState],
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let mut pool: Vec<usize> = (0..validators.len())
        .filter(|&i| validators[i].is_active())
        .collect();
    if n == 0 {
        return Err(Error::EmptyCommittee);
    }
    if pool.len() < n {
        return Err(Error::InsufficientValidators {
            needed: n,
            available: pool.len(),
        });
    }
    if pool.len() == n {
        return Ok(pool);
    }
    let mut picked = Vec::with_capacity(n);
    for _ in 0..n {
        let total: f64 = pool.iter().map(|&i| validators[i].stake.amount()).sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = pool.len() - 1;
        for (k, &i) in pool.iter().enumerate() {
            acc += validators[i].stake.amount();
            if acc > target {
                chosen = k;
                break;
            }
        }
        picked.push(pool.remove(chosen));
    }
    Ok(picked)
}

/// Validity of the slot's block. Under [`ValidityPolicy::Prior`] the block is
/// invalid with probability `alpha`.
pub fn propose_block(policy: ValidityPolicy, alpha: f64, rng: &mut impl Rng) -> BlockValidity {
    match policy {
        ValidityPolicy::AllValid => BlockValidity::Valid,
        ValidityPolicy::Prior => {
            if rng.random::<f64>() < alpha {
                BlockValidity::Invalid
            } else {
                BlockValidity::Valid
            }
        }
    }
}

/// Votes cast by a committee plus, per member, whether the -1 entry was an
/// abstention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ballot {
    pub votes: DecisionProfile,
    pub abstained: Vec<bool>,
}

pub fn collect_votes(validity: BlockValidity, actions: &[Action]) -> Ballot {
    Ballot {
        votes: DecisionProfile::new(actions.iter().map(|a| a.vote_on(validity)).collect()),
        abstained: actions.iter().map(|&a| a == Action::Abstain).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub committee: Vec<ValidatorId>,
    pub block_validity: BlockValidity,
    pub votes: DecisionProfile,
    pub abstained: Vec<bool>,
    pub classifications: Vec<VoteClassification>,
    /// Normalized weights the decision used.
    pub weights: WeightVector<f64>,
    pub quota: Quota<f64>,
    pub outcome: ConsensusOutcome,
    pub weighted_approval_fraction: f64,
    /// Every committee weight was zero and the slot fell back to an
    /// unweighted 2/3 majority.
    pub fallback: bool,
    /// Blocks committed up to and including this slot.
    pub committed_count: u64,
    /// Profile of every validator after the update, in population order.
    pub profiles: Vec<f64>,
    pub suspended: Vec<ValidatorId>,
}

/// Evolving state of one run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub validators: Vec<ValidatorState>,
    committee: Option<Vec<usize>>,
    committed: u64,
}

impl SimState {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let adversaries = config.adversary_count();
        let validators = config
            .profiles()
            .into_iter()
            .zip(config.stakes())
            .enumerate()
            .map(|(i, (p, s))| {
                let behavior = if i < adversaries {
                    config.adversary_behavior
                } else {
                    config.honest_behavior
                };
                Ok(ValidatorState::new(
                    ValidatorId(i as u64 + 1),
                    Stake::new(s)?,
                    VotingProfile::new(p, config.update.cap_margin)?,
                    behavior,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SimState {
            validators,
            committee: None,
            committed: 0,
        })
    }

    pub fn committed(&self) -> u64 {
        self.committed
    }

    fn committee_for(&mut self, slot: u64, config: &ScenarioConfig) -> Result<Vec<usize>> {
        let n = config.committee_size();
        match config.committee_mode {
            CommitteeMode::Resampled => select_indices(
                &self.validators,
                n,
                &mut substream(config.seed, slot, Purpose::Committee),
            ),
            CommitteeMode::Persistent => {
                if self.committee.is_none() {
                    let drawn = select_indices(
                        &self.validators,
                        n,
                        &mut substream(config.seed, 0, Purpose::Committee),
                    )?;
                    self.committee = Some(drawn);
                }
                let members: Vec<usize> = self
                    .committee
                    .as_ref()
                    .into_iter()
                    .flatten()
                    .copied()
                    .filter(|&i| self.validators[i].is_active())
                    .collect();
                if members.is_empty() {
                    return Err(Error::InsufficientValidators {
                        needed: 1,
                        available: 0,
                    });
                }
                Ok(members)
            }
        }
    }
}

/// One slot: committee, proposal, votes, weighted decision, profile updates
/// and suspensions. Non-members keep their profiles.
pub fn process_slot(
    state: &mut SimState,
    slot: u64,
    config: &ScenarioConfig,
) -> Result<SlotRecord> {
    let members = state.committee_for(slot, config)?;
    let validity = propose_block(
        config.validity,
        config.welfare.alpha,
        &mut substream(config.seed, slot, Purpose::Proposal),
    );
    let mut vote_rng = substream(config.seed, slot, Purpose::Votes);
    let actions: Vec<Action> = members
        .iter()
        .map(|&i| state.validators[i].next_action(&mut vote_rng))
        .collect();
    let ballot = collect_votes(validity, &actions);

    let profiles: Vec<f64> = members
        .iter()
        .map(|&i| state.validators[i].profile.value())
        .collect();
    let raw = optimal_weights(&profiles)?;
    let (weights, quota, outcome, fallback) = match normalize_weights(&raw) {
        Ok(w) => {
            let quota = match config.quota {
                QuotaPolicy::Fixed { value } => Quota::new(value)?,
                QuotaPolicy::Optimal => optimal_quota(&raw, &config.welfare)?,
            };
            let outcome = weighted_decision(&ballot.votes, &w, quota)?;
            (w, quota, outcome, false)
        }
        Err(Error::DegenerateCommittee) => {
            let quota = Quota::two_thirds();
            let outcome = unweighted_decision(&ballot.votes, quota)?;
            (
                normalize_weights(&WeightVector::uniform(members.len()))?,
                quota,
                outcome,
                true,
            )
        }
        Err(e) => return Err(e),
    };
    let fraction = weighted_approval_fraction(&ballot.votes, &weights)?;
    if outcome.is_approve() {
        state.committed += 1;
    }

    let mut classifications = Vec::with_capacity(members.len());
    let mut suspended = Vec::new();
    for (&i, &vote) in members.iter().zip(ballot.votes.votes()) {
        let cls = classify(vote, validity);
        classifications.push(cls);
        let v = &mut state.validators[i];
        let raw = raw_update(v.profile.value(), cls, &config.update);
        v.profile = clamp_profile(raw, PROFILE_FLOOR, config.update.cap_margin);
        if suspension_check(raw, slot, &config.update) {
            v.status = ValidatorStatus::Suspended;
            suspended.push(v.id);
        }
    }

    Ok(SlotRecord {
        slot,
        committee: members.iter().map(|&i| state.validators[i].id).collect(),
        block_validity: validity,
        votes: ballot.votes,
        abstained: ballot.abstained,
        classifications,
        weights,
        quota,
        outcome,
        weighted_approval_fraction: fraction,
        fallback,
        committed_count: state.committed,
        profiles: state.validators.iter().map(|v| v.profile.value()).collect(),
        suspended,
    })
}

/// Runs `config.horizon` slots from a fresh state.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<SlotRecord>> {
    let mut state = SimState::new(config)?;
    (0..config.horizon)
        .map(|slot| process_slot(&mut state, slot, config))
        .collect()
}

/// First slot whose weighted approval reaches [`RECOVERY_THRESHOLD`].
pub fn recovery_slot(records: &[SlotRecord]) -> Option<u64> {
    records
        .iter()
        .find(|r| r.weighted_approval_fraction >= RECOVERY_THRESHOLD)
        .map(|r| r.slot)
}

pub fn approval_series(records: &[SlotRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.weighted_approval_fraction)
        .collect()
}

/// Profile of the validator at population index `index` after each slot.
pub fn profile_series(records: &[SlotRecord], index: usize) -> Vec<f64> {
    records.iter().map(|r| r.profiles[index]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vote;
    use crate::mwu::BehaviorMix;

    fn population(stakes: &[f64]) -> Vec<ValidatorState> {
        stakes
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                ValidatorState::new(
                    ValidatorId(i as u64 + 1),
                    Stake::new(s).unwrap(),
                    VotingProfile::new(0.9, 1e-5).unwrap(),
                    BehaviorPolicy::Honest,
                )
            })
            .collect()
    }

    #[test]
    fn whole_population_committee() {
        let vs = population(&[1.0; 100]);
        let c = select_committee(&vs, 100, 0, &mut substream(0, 0, Purpose::Committee)).unwrap();
        assert_eq!(c.size(), 100);
        assert_eq!(c.ids()[0], ValidatorId(1));
    }

    #[test]
    fn zero_stake_is_never_selected() {
        let vs = population(&[1.0, 0.0, 0.0]);
        for slot in 0..50 {
            let c = select_committee(&vs, 1, slot, &mut substream(9, slot, Purpose::Committee))
                .unwrap();
            assert_eq!(c.ids(), vec![ValidatorId(1)]);
        }
        assert!(matches!(
            select_committee(&vs, 2, 0, &mut substream(0, 0, Purpose::Committee)),
            Err(Error::InsufficientValidators {
                needed: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn selection_is_stake_proportional() {
        let vs = population(&[3.0, 1.0]);
        let draws = 100_000;
        let first = (0..draws)
            .filter(|&slot| {
                let mut rng = substream(5, slot, Purpose::Committee);
                select_indices(&vs, 1, &mut rng).unwrap()[0] == 0
            })
            .count();
        assert!((first as f64 / draws as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn selection_without_replacement() {
        let vs = population(&[5.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let mut rng = substream(1, 0, Purpose::Committee);
        for _ in 0..200 {
            let mut c = select_indices(&vs, 4, &mut rng).unwrap();
            c.sort();
            c.dedup();
            assert_eq!(c.len(), 4);
        }
    }

    #[test]
    fn proposal_policies() {
        let mut rng = substream(3, 0, Purpose::Proposal);
        assert_eq!(
            propose_block(ValidityPolicy::AllValid, 0.5, &mut rng),
            BlockValidity::Valid
        );
        assert!((0..1000)
            .all(|_| propose_block(ValidityPolicy::Prior, 0.0, &mut rng) == BlockValidity::Valid));
        let invalid = (0..100_000)
            .filter(|_| {
                propose_block(ValidityPolicy::Prior, 0.5, &mut rng) == BlockValidity::Invalid
            })
            .count();
        assert!((invalid as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn vote_collection() {
        let honest = vec![Action::Follow; 5];
        assert!(collect_votes(BlockValidity::Valid, &honest)
            .votes
            .votes()
            .iter()
            .all(|v| v.is_approve()));
        let invalid = collect_votes(BlockValidity::Invalid, &honest[..1]);
        assert_eq!(invalid.votes.votes(), &[Vote::Reject]);
        assert_eq!(invalid.abstained, vec![false]);

        let mut actions = vec![Action::Abstain; 40];
        actions.extend([Action::Follow; 60]);
        let b = collect_votes(BlockValidity::Valid, &actions);
        assert_eq!(b.votes.approvals(), 60);
        assert_eq!(b.abstained.iter().filter(|&&a| a).count(), 40);
    }

    #[test]
    fn unanimous_slot_with_optimal_quota() {
        let config = ScenarioConfig {
            adversary_fraction: 0.0,
            quota: QuotaPolicy::Optimal,
            horizon: 1,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert_eq!(r[0].outcome, ConsensusOutcome::Approve);
        assert_eq!(r[0].weighted_approval_fraction, 1.0);
    }

    #[test]
    fn blocked_first_slot_rejects() {
        let config = ScenarioConfig {
            horizon: 1,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert!((r[0].weighted_approval_fraction - 0.6).abs() < 1e-12);
        assert_eq!(r[0].outcome, ConsensusOutcome::Reject);
        assert_eq!(r[0].profiles.len(), 100);
        assert!((r[0].profiles[99] - 0.9009).abs() < 1e-12);
        assert!((r[0].profiles[0] - 0.9 * 0.999f64.powf(0.01)).abs() < 1e-15);
    }

    #[test]
    fn single_member_committee_approves() {
        for q in [0.5, 0.8, 1.0] {
            let config = ScenarioConfig {
                population: 1,
                adversary_fraction: 0.0,
                quota: QuotaPolicy::Fixed { value: q },
                horizon: 1,
                ..Default::default()
            };
            assert!(run_scenario(&config).unwrap()[0].outcome.is_approve());
        }
    }

    #[test]
    fn degenerate_committee_falls_back() {
        let config = ScenarioConfig {
            population: 3,
            initial_profile: 0.5,
            adversary_fraction: 0.0,
            horizon: 2,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert!(r[0].fallback);
        assert!(r[0].outcome.is_approve());
        assert_eq!(r[0].quota, Quota::two_thirds());
        assert!(
            !r[1].fallback,
            "profiles moved off one half after the first slot"
        );
    }

    #[test]
    fn no_adversary_means_full_approval() {
        let config = ScenarioConfig {
            adversary_fraction: 0.0,
            horizon: 50,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert!(approval_series(&r).iter().all(|&f| f == 1.0));
        assert_eq!(recovery_slot(&r), Some(0));
        assert_eq!(r.last().unwrap().committed_count, 50);
    }

    #[test]
    fn fully_blocked_never_recovers() {
        let config = ScenarioConfig {
            adversary_fraction: 1.0,
            horizon: 50,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert!(approval_series(&r).iter().all(|&f| f == 0.0));
        assert_eq!(recovery_slot(&r), None);
        assert_eq!(r.last().unwrap().committed_count, 0);
    }

    #[test]
    fn committed_plus_skipped_is_horizon() {
        let config = ScenarioConfig {
            population: 12,
            committee_size: Some(7),
            committee_mode: CommitteeMode::Resampled,
            validity: ValidityPolicy::Prior,
            adversary_behavior: BehaviorPolicy::Mixed {
                q: 0.5,
                q1: 0.3,
                schedule: ScheduleKind::SeededRandom,
            },
            quota: QuotaPolicy::Optimal,
            horizon: 400,
            seed: 17,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        let committed = r.iter().filter(|x| x.outcome.is_approve()).count() as u64;
        let skipped = r.iter().filter(|x| !x.outcome.is_approve()).count() as u64;
        assert_eq!(committed + skipped, config.horizon);
        assert_eq!(r.last().unwrap().committed_count, committed);
        assert!(r.iter().all(|x| x.committee.len() == 7));
        assert_eq!(r, run_scenario(&config).unwrap());
    }

    #[test]
    fn persistent_sampled_committee_is_fixed() {
        let config = ScenarioConfig {
            population: 20,
            committee_size: Some(5),
            horizon: 30,
            seed: 4,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        assert!(r.iter().all(|x| x.committee == r[0].committee));
        // non-members keep their starting profile
        let members: Vec<usize> = r[0].committee.iter().map(|id| id.0 as usize - 1).collect();
        for i in (0..20).filter(|i| !members.contains(i)) {
            assert_eq!(r.last().unwrap().profiles[i], 0.9);
        }
    }

    #[test]
    fn deviating_validator_is_suspended() {
        let mut config = ScenarioConfig {
            population: 5,
            adversary_fraction: 0.2,
            adversary_behavior: BehaviorPolicy::Mixed {
                q: 0.0,
                q1: 0.0,
                schedule: ScheduleKind::Periodic,
            },
            validity: ValidityPolicy::Prior,
            initial_profile: 0.6,
            horizon: 200,
            seed: 2,
            ..Default::default()
        };
        config.update.suspension_enabled = true;
        config.update.grace_period = 3;
        config.update.delta = 0.05;
        let r = run_scenario(&config).unwrap();
        let when = r
            .iter()
            .position(|x| x.suspended.contains(&ValidatorId(1)))
            .expect("suspended");
        assert!(when as u64 >= config.update.grace_period);
        assert!(r[when + 1..]
            .iter()
            .all(|x| !x.committee.contains(&ValidatorId(1))));
        assert!(r
            .iter()
            .all(|x| x.suspended.iter().all(|&id| id == ValidatorId(1))));
    }

    #[test]
    fn periodic_mix_follows_its_schedule() {
        let config = ScenarioConfig {
            population: 1,
            adversary_fraction: 1.0,
            adversary_behavior: BehaviorPolicy::Mixed {
                q: 0.8,
                q1: 0.1,
                schedule: ScheduleKind::Periodic,
            },
            horizon: 10,
            ..Default::default()
        };
        let r = run_scenario(&config).unwrap();
        let expected = BehaviorMix::new(0.8, 0.1)
            .unwrap()
            .schedule(ScheduleKind::Periodic, 10, 0);
        let got: Vec<bool> = r.iter().map(|x| x.abstained[0]).collect();
        let want: Vec<bool> = expected.iter().map(|&a| a == Action::Abstain).collect();
        assert_eq!(got, want);
    }
}
