use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{WelfareParams, PROFILE_FLOOR};
use crate::mwu::{BehaviorMix, ScheduleKind, UpdateParams};

/// How a validator votes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviorPolicy {
    /// Always votes according to the block's validity.
    Honest,
    /// Never votes, whether offline or censored.
    Blocked,
    /// Follows a [`BehaviorMix`]: votes correctly, abstains, or votes against
    /// the block's validity.
    Mixed {
        q: f64,
        q1: f64,
        #[serde(default)]
        schedule: ScheduleKind,
    },
}

impl BehaviorPolicy {
    pub fn mix(&self) -> Option<BehaviorMix<f64>> {
        match *self {
            BehaviorPolicy::Mixed { q, q1, .. } => Some(BehaviorMix { q, q1 }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mix().map_or(Ok(()), |m| m.validate())
    }
}

/// Ground truth of proposed blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityPolicy {
    /// Every proposal is valid; faults are on the voting side only.
    #[default]
    AllValid,
    /// Each proposal is invalid with probability `α`.
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum QuotaPolicy {
    /// Welfare-optimal quota from the current committee, clamped to `[0.5, 1]`.
    Optimal,
    Fixed {
        value: f64,
    },
}

impl Default for QuotaPolicy {
    fn default() -> Self {
        QuotaPolicy::Fixed { value: 2.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitteeMode {
    /// One committee drawn before the first slot and kept throughout.
    #[default]
    Persistent,
    /// A fresh stake-proportional draw every slot.
    Resampled,
}

/// Full description of one simulation run. Every field has a default, and
/// the defaults describe 100 validators at profile 0.9, 40% of them blocked,
/// judged by a fixed 2/3 quota.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub population: usize,
    /// Defaults to the whole population.
    pub committee_size: Option<usize>,
    pub committee_mode: CommitteeMode,
    /// Starting profile of every validator unless `initial_profiles` is set.
    pub initial_profile: f64,
    pub initial_profiles: Option<Vec<f64>>,
    pub initial_stake: f64,
    pub initial_stakes: Option<Vec<f64>>,
    /// Fraction of the population, counted from the first validator, that
    /// follows `adversary_behavior`.
    pub adversary_fraction: f64,
    pub adversary_behavior: BehaviorPolicy,
    pub honest_behavior: BehaviorPolicy,
    pub welfare: WelfareParams<f64>,
    pub update: UpdateParams<f64>,
    pub quota: QuotaPolicy,
    /// Number of slots.
    pub horizon: u64,
    pub seed: u64,
    pub validity: ValidityPolicy,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "blocked-40".into(),
            population: 100,
            committee_size: None,
            committee_mode: CommitteeMode::Persistent,
            initial_profile: 0.9,
            initial_profiles: None,
            initial_stake: 1.0,
            initial_stakes: None,
            adversary_fraction: 0.4,
            adversary_behavior: BehaviorPolicy::Blocked,
            honest_behavior: BehaviorPolicy::Honest,
            welfare: WelfareParams::default(),
            update: UpdateParams::default(),
            quota: QuotaPolicy::default(),
            horizon: 300,
            seed: 0,
            validity: ValidityPolicy::AllValid,
        }
    }
}

fn bad(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    pub fn committee_size(&self) -> usize {
        self.committee_size.unwrap_or(self.population)
    }

    /// Number of validators following `adversary_behavior`.
    pub fn adversary_count(&self) -> usize {
        (self.adversary_fraction * self.population as f64).round() as usize
    }

    pub fn profiles(&self) -> Vec<f64> {
        self.initial_profiles
            .clone()
            .unwrap_or_else(|| vec![self.initial_profile; self.population])
    }

    pub fn stakes(&self) -> Vec<f64> {
        self.initial_stakes
            .clone()
            .unwrap_or_else(|| vec![self.initial_stake; self.population])
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(bad("population", "must be at least 1"));
        }
        let n = self.committee_size();
        if n == 0 || n > self.population {
            return Err(bad(
                "committee_size",
                format!("{n} not in [1, population = {}]", self.population),
            ));
        }
        if !(0.0..=1.0).contains(&self.adversary_fraction) {
            return Err(bad(
                "adversary_fraction",
                format!("{} not in [0, 1]", self.adversary_fraction),
            ));
        }
        if self.horizon == 0 {
            return Err(bad("horizon", "must be at least 1"));
        }
        self.update.validate()?;
        self.welfare.validate()?;
        let cap = 1.0 - self.update.cap_margin;
        if let Some(p) = &self.initial_profiles {
            if p.len() != self.population {
                return Err(bad(
                    "initial_profiles",
                    format!(
                        "{} entries for a population of {}",
                        p.len(),
                        self.population
                    ),
                ));
            }
        }
        for p in self.profiles() {
            if !(PROFILE_FLOOR..=cap).contains(&p) {
                return Err(bad("initial_profiles", format!("{p} not in [0.5, {cap}]")));
            }
        }
        if let Some(s) = &self.initial_stakes {
            if s.len() != self.population {
                return Err(bad(
                    "initial_stakes",
                    format!(
                        "{} entries for a population of {}",
                        s.len(),
                        self.population
                    ),
                ));
            }
        }
        for s in self.stakes() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(bad(
                    "initial_stakes",
                    format!("{s} is not a finite non-negative amount"),
                ));
            }
        }
        if let QuotaPolicy::Fixed { value } = self.quota {
            if !(0.5..=1.0).contains(&value) {
                return Err(bad("quota.value", format!("{value} not in [0.5, 1]")));
            }
        }
        self.adversary_behavior.validate()?;
        self.honest_behavior.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.adversary_count(), 40);
        assert_eq!(c.committee_size(), 100);
    }

    #[test]
    fn invalid_fields_are_named() {
        let check = |c: ScenarioConfig, field: &str| match c.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, field),
            other => panic!("expected error on {field}, got {other:?}"),
        };
        check(
            ScenarioConfig {
                adversary_fraction: 1.5,
                ..Default::default()
            },
            "adversary_fraction",
        );
        check(
            ScenarioConfig {
                committee_size: Some(101),
                ..Default::default()
            },
            "committee_size",
        );
        check(
            ScenarioConfig {
                horizon: 0,
                ..Default::default()
            },
            "horizon",
        );
        check(
            ScenarioConfig {
                initial_profile: 0.4,
                ..Default::default()
            },
            "initial_profiles",
        );
        check(
            ScenarioConfig {
                quota: QuotaPolicy::Fixed { value: 0.3 },
                ..Default::default()
            },
            "quota.value",
        );
        check(
            ScenarioConfig {
                initial_stakes: Some(vec![1.0; 3]),
                ..Default::default()
            },
            "initial_stakes",
        );
        let mixed = BehaviorPolicy::Mixed {
            q: 0.8,
            q1: 0.5,
            schedule: ScheduleKind::Periodic,
        };
        check(
            ScenarioConfig {
                adversary_behavior: mixed,
                ..Default::default()
            },
            "q + q1",
        );
    }
}
