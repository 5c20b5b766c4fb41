//! Slot-by-slot consensus simulation.
//!
//! Each slot selects a committee, proposes a block whose validity is known to
//! the simulator, collects votes according to each validator's behaviour,
//! decides with log-odds weights, and updates every member's profile.
//!
//! Randomness comes from ChaCha8 substreams: the generator for a given
//! `(slot, purpose)` pair is `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `8 · slot + purpose`. Extra draws for one purpose never shift the
//! draws of another, and a slot never depends on how many draws earlier
//! slots made.

mod config;
mod engine;

pub use config::{BehaviorPolicy, CommitteeMode, QuotaPolicy, ScenarioConfig, ValidityPolicy};
pub use engine::{
    approval_series, collect_votes, process_slot, profile_series, propose_block, recovery_slot,
    run_scenario, select_committee, substream, Ballot, Purpose, SimState, SlotRecord,
    ValidatorState, ValidatorStatus, RECOVERY_THRESHOLD,
};
