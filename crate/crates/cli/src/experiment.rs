//! Experiment configurations and the runs behind `simulate` and `sweep`.
//!
//! A configuration is a TOML file whose optional top-level `kind` selects one
//! of three experiments:
//!
//! * `scenario` (default): the slot simulator, see [`ScenarioConfig`];
//! * `trajectory`: one validator's profile under a behaviour mix;
//! * `committee`: weights, quotas and consensus probabilities of fixed
//!   committees.
//!
//! Every field has a default, so an empty file is the default blocked-voter
//! scenario. Unknown keys are rejected with the offending name.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;
use weighted_voting::sim::{approval_series, recovery_slot, run_scenario, ScenarioConfig};
use weighted_voting::{
    consensus_probability_exact, consensus_probability_mc, expected_welfare, normalize_weights,
    optimal_weights, run_trajectory, tolerance_constants, BehaviorMix, BlockValidity, DecisionRule,
    Quota, ScheduleKind, UpdateParams, VotingProfile, WeightVector, WelfareParams,
};

use crate::output::{fmt_num, now, write_json, CsvFile, RunManifest, MANIFEST_FILE};
use crate::{CliError, CliResult};

/// One validator's profile over time under a fixed behaviour mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub name: String,
    pub initial_profile: f64,
    /// Fraction of slots voting correctly.
    pub q: f64,
    /// Fraction of slots abstaining on a valid block; the rest approve an
    /// invalid block.
    pub q1: f64,
    pub schedule: ScheduleKind,
    pub slots: usize,
    pub seed: u64,
    pub update: UpdateParams<f64>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            name: "mixed-decline".into(),
            initial_profile: 0.9,
            q: 0.8,
            q1: 0.1,
            schedule: ScheduleKind::Periodic,
            slots: 10_000,
            seed: 0,
            update: UpdateParams::protocol_defaults().with_delta(1e-2),
        }
    }
}

impl TrajectoryConfig {
    pub fn mix(&self) -> BehaviorMix<f64> {
        BehaviorMix {
            q: self.q,
            q1: self.q1,
        }
    }

    pub fn validate(&self) -> weighted_voting::Result<()> {
        self.update.validate()?;
        self.mix().validate()?;
        VotingProfile::new(self.initial_profile, self.update.cap_margin)?;
        if self.slots == 0 {
            return Err(weighted_voting::Error::InvalidParameter {
                name: "slots",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitteeSpec {
    #[serde(default)]
    pub name: String,
    pub profiles: Vec<f64>,
    /// Extra weights evaluated at every comparison quota.
    #[serde(default)]
    pub custom_weights: Option<Vec<f64>>,
}

/// Fixed committees evaluated under several rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitteeConfig {
    pub name: String,
    pub welfare: WelfareParams<f64>,
    /// Quotas at which the unweighted, log-odds weighted and custom weighted
    /// rules are evaluated.
    pub compare_quotas: Vec<f64>,
    pub committees: Vec<CommitteeSpec>,
    /// Monte-Carlo trials for committees too large to enumerate.
    pub mc_trials: u64,
    pub seed: u64,
}

impl Default for CommitteeConfig {
    fn default() -> Self {
        CommitteeConfig {
            name: "two-strong-three-weak".into(),
            welfare: WelfareParams {
                alpha: 0.5,
                loss_reject_valid: 1.0,
                loss_accept_invalid: 1.0,
            },
            compare_quotas: vec![2.0 / 3.0],
            committees: vec![CommitteeSpec {
                name: "two-strong-three-weak".into(),
                profiles: vec![0.9, 0.9, 0.6, 0.6, 0.6],
                custom_weights: None,
            }],
            mc_trials: 100_000,
            seed: 0,
        }
    }
}

impl CommitteeConfig {
    pub fn validate(&self) -> weighted_voting::Result<()> {
        self.welfare.validate()?;
        for &q in &self.compare_quotas {
            Quota::new(q)?;
        }
        if self.committees.is_empty() {
            return Err(weighted_voting::Error::InvalidParameter {
                name: "committees",
                reason: "at least one committee is required".into(),
            });
        }
        for c in &self.committees {
            optimal_weights(&c.profiles)?;
            if let Some(w) = &c.custom_weights {
                let w = WeightVector::new(w.clone())?;
                if w.len() != c.profiles.len() {
                    return Err(weighted_voting::Error::LengthMismatch {
                        expected: c.profiles.len(),
                        found: w.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Scenario(ScenarioConfig),
    Trajectory(TrajectoryConfig),
    Committee(CommitteeConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Scenario(_) => "scenario",
            Experiment::Trajectory(_) => "trajectory",
            Experiment::Committee(_) => "committee",
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Experiment::Scenario(c) => &c.name,
            Experiment::Trajectory(c) => &c.name,
            Experiment::Committee(c) => &c.name,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Experiment::Scenario(c) => c.seed,
            Experiment::Trajectory(c) => c.seed,
            Experiment::Committee(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::Scenario(c) => c.seed = seed,
            Experiment::Trajectory(c) => c.seed = seed,
            Experiment::Committee(c) => c.seed = seed,
        }
    }

    pub fn validate(&self) -> weighted_voting::Result<()> {
        match self {
            Experiment::Scenario(c) => c.validate(),
            Experiment::Trajectory(c) => c.validate(),
            Experiment::Committee(c) => c.validate(),
        }
    }

    fn config_json(&self) -> serde_json::Value {
        match self {
            Experiment::Scenario(c) => serde_json::to_value(c),
            Experiment::Trajectory(c) => serde_json::to_value(c),
            Experiment::Committee(c) => serde_json::to_value(c),
        }
        .expect("configurations serialize")
    }
}

/// Parses and validates a configuration.
pub fn parse_experiment(text: &str) -> anyhow::Result<Experiment> {
    let mut table: toml::Table = toml::from_str(text)?;
    let kind = match table.remove("kind") {
        None => "scenario".to_string(),
        Some(toml::Value::String(s)) => s,
        Some(other) => bail!("`kind` must be a string, found {other}"),
    };
    let value = toml::Value::Table(table);
    let exp = match kind.as_str() {
        "scenario" => Experiment::Scenario(value.try_into()?),
        "trajectory" => Experiment::Trajectory(value.try_into()?),
        "committee" => Experiment::Committee(value.try_into()?),
        other => bail!("unknown `kind` `{other}`; expected scenario, trajectory or committee"),
    };
    exp.validate()?;
    Ok(exp)
}

pub fn load_experiment(path: &Path) -> CliResult<Experiment> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Input)?;
    parse_experiment(&text)
        .with_context(|| format!("invalid configuration {}", path.display()))
        .map_err(CliError::Input)
}

/// What one run wrote.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub name: String,
    pub kind: &'static str,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

impl RunOutput {
    pub fn report(&self) -> String {
        let headline = match self.kind {
            "scenario" => format!(
                "recovery slot {}, {} of {} blocks committed",
                self.summary["recovery_slot"], self.summary["committed"], self.summary["horizon"]
            ),
            "trajectory" => format!(
                "profile {} -> {} over {} slots",
                self.summary["initial_profile"],
                self.summary["final_profile"],
                self.summary["slots"]
            ),
            _ => format!(
                "{} committees evaluated",
                self.summary["committees"].as_array().map_or(0, |a| a.len())
            ),
        };
        format!(
            "{} [{}]: {} ({})",
            self.name,
            self.kind,
            headline,
            self.dir.display()
        )
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Runs `exp` and writes its files, a summary and the manifest into `dir`.
pub fn run_experiment(exp: &Experiment, dir: &Path, gnuplot: bool) -> CliResult<RunOutput> {
    exp.validate().map_err(CliError::input)?;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(CliError::Runtime)?;
    let started_at = now();
    let (mut files, summary) = match exp {
        Experiment::Scenario(c) => run_scenario_files(c, dir),
        Experiment::Trajectory(c) => run_trajectory_files(c, dir),
        Experiment::Committee(c) => run_committee_files(c, dir),
    }
    .map_err(CliError::Runtime)?;
    if gnuplot {
        if let Some(script) = gnuplot_script(exp) {
            let path = dir.join("plot.gp");
            std::fs::write(&path, script)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(CliError::Runtime)?;
            files.push(path);
        }
    }
    let manifest = RunManifest {
        tool: "wvote",
        version: env!("CARGO_PKG_VERSION"),
        kind: exp.kind(),
        config: exp.config_json(),
        seed: exp.seed(),
        started_at,
        finished_at: now(),
        outputs: files.iter().map(|p| file_name(p)).collect(),
    };
    files.push(write_json(&dir.join(MANIFEST_FILE), &manifest).map_err(CliError::Runtime)?);
    Ok(RunOutput {
        name: exp.name().to_string(),
        kind: exp.kind(),
        dir: dir.to_path_buf(),
        files,
        summary,
    })
}

type Written = anyhow::Result<(Vec<PathBuf>, serde_json::Value)>;

fn run_scenario_files(config: &ScenarioConfig, dir: &Path) -> Written {
    let records = run_scenario(config).map_err(|e| anyhow!(e))?;

    let mut slots = CsvFile::create(
        &dir.join("slots.csv"),
        &[
            "slot",
            "weighted_approval_fraction",
            "outcome",
            "committed_count",
        ],
    )?;
    let mut profiles = CsvFile::create(
        &dir.join("profiles.csv"),
        &["slot", "validator_id", "profile"],
    )?;
    for r in &records {
        let outcome = if r.outcome.is_approve() {
            "approve"
        } else {
            "reject"
        };
        slots.row([
            r.slot.to_string(),
            fmt_num(r.weighted_approval_fraction),
            outcome.to_string(),
            r.committed_count.to_string(),
        ])?;
        for (i, &p) in r.profiles.iter().enumerate() {
            profiles.row([r.slot.to_string(), (i + 1).to_string(), fmt_num(p)])?;
        }
    }
    let files = vec![slots.finish()?, profiles.finish()?];

    let last = records.last().expect("horizon is at least one slot");
    let committed = last.committed_count;
    let suspended: Vec<u64> = records
        .iter()
        .flat_map(|r| r.suspended.iter().map(|id| id.0))
        .collect();
    let final_profiles: Vec<_> = last
        .profiles
        .iter()
        .enumerate()
        .map(|(i, &p)| json!({ "validator_id": i + 1, "profile": p }))
        .collect();
    let summary = json!({
        "manifest": MANIFEST_FILE,
        "name": config.name,
        "kind": "scenario",
        "horizon": config.horizon,
        "seed": config.seed,
        "recovery_slot": recovery_slot(&records),
        "committed": committed,
        "skipped": config.horizon - committed,
        "fallback_slots": records.iter().filter(|r| r.fallback).count(),
        "suspended": suspended,
        "final_weighted_approval_fraction": approval_series(&records).last(),
        "final_profiles": final_profiles,
        "config": config,
    });
    let mut files = files;
    files.push(write_json(&dir.join("summary.json"), &summary)?);
    Ok((files, summary))
}

fn run_trajectory_files(config: &TrajectoryConfig, dir: &Path) -> Written {
    let mix = config.mix();
    let actions = mix.schedule(config.schedule, config.slots, config.seed);
    let classes: Vec<_> = actions.iter().map(|a| a.mix_classification()).collect();
    let start = VotingProfile::new(config.initial_profile, config.update.cap_margin)
        .map_err(|e| anyhow!(e))?;
    let path = run_trajectory(start, &classes, &config.update);

    let mut csv = CsvFile::create(&dir.join("trajectory.csv"), &["slot", "action", "profile"])?;
    for (t, (a, p)) in actions.iter().zip(&path).enumerate() {
        let action = match a {
            weighted_voting::Action::Follow => "follow",
            weighted_voting::Action::Abstain => "abstain",
            weighted_voting::Action::Deviate => "deviate",
        };
        csv.row([t.to_string(), action.to_string(), fmt_num(p.value())])?;
    }
    let mut files = vec![csv.finish()?];

    let values: Vec<f64> = path.iter().map(|p| p.value()).collect();
    let cap = 1.0 - config.update.cap_margin;
    let tolerance = tolerance_constants(&config.update).ok();
    let summary = json!({
        "manifest": MANIFEST_FILE,
        "name": config.name,
        "kind": "trajectory",
        "slots": config.slots,
        "seed": config.seed,
        "initial_profile": config.initial_profile,
        "final_profile": values.last(),
        "min_profile": values.iter().cloned().fold(f64::INFINITY, f64::min),
        "max_profile": values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "first_cap_slot": values.iter().position(|&p| p == cap),
        "first_floor_slot": values.iter().position(|&p| p == 0.5),
        "c1": tolerance.map(|t| t.c1),
        "c2": tolerance.map(|t| t.c2),
        "sustains": tolerance.map(|t| t.sustains(&mix)),
        "config": config,
    });
    files.push(write_json(&dir.join("summary.json"), &summary)?);
    Ok((files, summary))
}

/// Exact probabilities up to the enumeration limit, Monte-Carlo beyond.
fn probabilities(
    profiles: &[f64],
    rule: &DecisionRule<f64>,
    config: &CommitteeConfig,
) -> anyhow::Result<(f64, f64, &'static str)> {
    if profiles.len() <= weighted_voting::rules::ENUMERATION_LIMIT {
        let v = consensus_probability_exact(profiles, rule, BlockValidity::Valid)?;
        let i = consensus_probability_exact(profiles, rule, BlockValidity::Invalid)?;
        Ok((v, i, "exact"))
    } else {
        let v = consensus_probability_mc(
            profiles,
            rule,
            BlockValidity::Valid,
            config.mc_trials,
            config.seed,
        )?;
        let i = consensus_probability_mc(
            profiles,
            rule,
            BlockValidity::Invalid,
            config.mc_trials,
            config.seed,
        )?;
        Ok((v.probability, i.probability, "monte_carlo"))
    }
}

fn run_committee_files(config: &CommitteeConfig, dir: &Path) -> Written {
    let mut weights_csv = CsvFile::create(
        &dir.join("weights.csv"),
        &[
            "committee",
            "index",
            "profile",
            "raw_weight",
            "normalized_weight",
        ],
    )?;
    let mut rules_csv = CsvFile::create(
        &dir.join("rules.csv"),
        &[
            "committee",
            "rule",
            "quota",
            "probability_valid",
            "probability_invalid",
            "method",
        ],
    )?;
    let mut committees = Vec::new();
    for (k, c) in config.committees.iter().enumerate() {
        let name = if c.name.is_empty() {
            format!("committee-{}", k + 1)
        } else {
            c.name.clone()
        };
        let raw = optimal_weights(&c.profiles)?;
        let normalized = normalize_weights(&raw).ok();
        for (i, &p) in c.profiles.iter().enumerate() {
            let norm = normalized
                .as_ref()
                .map_or(String::new(), |w| fmt_num(w.as_slice()[i]));
            weights_csv.row([
                name.clone(),
                (i + 1).to_string(),
                fmt_num(p),
                fmt_num(raw.as_slice()[i]),
                norm,
            ])?;
        }

        let optimal = weighted_voting::OptimalRule::new(&c.profiles, &config.welfare)?;
        let quota_unclamped = optimal.quota_unclamped().ok();
        let quota = optimal.quota().ok().map(|q| q.value());
        let mut rules: Vec<(String, Option<f64>, DecisionRule<f64>)> = vec![(
            "optimal".into(),
            quota_unclamped,
            DecisionRule::Optimal(optimal),
        )];
        for &q in &config.compare_quotas {
            let quota = Quota::new(q)?;
            rules.push((
                "unweighted".into(),
                Some(q),
                DecisionRule::unweighted(quota),
            ));
            rules.push((
                "log_odds_weights".into(),
                Some(q),
                DecisionRule::weighted(raw.clone(), quota),
            ));
            if let Some(w) = &c.custom_weights {
                rules.push((
                    "custom_weights".into(),
                    Some(q),
                    DecisionRule::weighted(WeightVector::new(w.clone())?, quota),
                ));
            }
        }
        let mut evaluated = Vec::new();
        for (rule_name, q, rule) in &rules {
            let (pv, pi, method) = probabilities(&c.profiles, rule, config)?;
            rules_csv.row([
                name.clone(),
                rule_name.clone(),
                q.map_or(String::new(), fmt_num),
                fmt_num(pv),
                fmt_num(pi),
                method.to_string(),
            ])?;
            evaluated.push(json!({
                "rule": rule_name, "quota": q, "probability_valid": pv, "probability_invalid": pi, "method": method,
            }));
        }
        let welfare = if c.profiles.len() <= weighted_voting::rules::ENUMERATION_LIMIT {
            Some(expected_welfare(&c.profiles, &rules[0].2, &config.welfare)?)
        } else {
            None
        };
        committees.push(json!({
            "name": name,
            "size": c.profiles.len(),
            "total_weight": raw.total(),
            "normalized_weights": normalized.map(|w| w.into_vec()),
            "quota_unclamped": quota_unclamped,
            "quota": quota,
            "expected_welfare_optimal": welfare,
            "rules": evaluated,
        }));
    }
    let mut files = vec![weights_csv.finish()?, rules_csv.finish()?];
    let summary = json!({
        "manifest": MANIFEST_FILE,
        "name": config.name,
        "kind": "committee",
        "committees": committees,
        "config": config,
    });
    files.push(write_json(&dir.join("summary.json"), &summary)?);
    Ok((files, summary))
}

fn gnuplot_script(exp: &Experiment) -> Option<String> {
    let head = "set datafile separator ','\nset key top left\nset xlabel 'slot'\n";
    match exp {
        Experiment::Scenario(c) => Some(format!(
            "{head}set ylabel 'weighted approval'\nset yrange [0:1.05]\nset title '{}'\n\
             plot 'slots.csv' using 1:2 every ::1 with lines title 'weighted approval', \
             2.0/3 with lines dashtype 2 title '2/3'\n",
            c.name
        )),
        Experiment::Trajectory(c) => Some(format!(
            "{head}set ylabel 'voting profile'\nset yrange [0.45:1.02]\nset title '{}'\n\
             plot 'trajectory.csv' using 1:3 every ::1 with lines title 'profile'\n",
            c.name
        )),
        Experiment::Committee(_) => None,
    }
}

/// Loads `path` (or the default scenario), applies the seed override and runs it.
pub fn run_config_file(
    path: Option<&Path>,
    dir: &Path,
    seed: Option<u64>,
    gnuplot: bool,
) -> CliResult<RunOutput> {
    let mut exp = match path {
        Some(p) => load_experiment(p)?,
        None => Experiment::Scenario(ScenarioConfig::default()),
    };
    if let Some(s) = seed {
        exp.set_seed(s);
    }
    run_experiment(&exp, dir, gnuplot)
}

/// Runs every configuration (once per seed when seeds are given) on its own
/// thread, each into `dir/<name>` or `dir/<name>-seed<k>`.
pub fn sweep(
    paths: &[PathBuf],
    dir: &Path,
    seeds: Option<&[u64]>,
    gnuplot: bool,
) -> CliResult<Vec<RunOutput>> {
    let mut jobs = Vec::new();
    for path in paths {
        let exp = load_experiment(path)?;
        match seeds {
            None => jobs.push((dir.join(exp.name()), exp)),
            Some(seeds) => {
                for &s in seeds {
                    let mut e = exp.clone();
                    e.set_seed(s);
                    jobs.push((dir.join(format!("{}-seed{s}", exp.name())), e));
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for (d, _) in &jobs {
        if !seen.insert(d.clone()) {
            return Err(CliError::input(anyhow!(
                "two runs would share the output directory {}; give the configurations distinct names",
                d.display()
            )));
        }
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(d, exp)| scope.spawn(move || run_experiment(exp, d, gnuplot)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::runtime(anyhow!("a run panicked"))))
            })
            .collect()
    })
}
