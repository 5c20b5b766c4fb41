//! The numeric subcommands: weights, quota, prob, decide, tolerance.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;
use weighted_voting::{
    consensus_probability_exact, consensus_probability_mc, normalize_weights, optimal_quota,
    optimal_quota_unclamped, optimal_weights, tolerance_constants, BehaviorMix, BlockValidity,
    DecisionProfile, DecisionRule, Quota, UpdateParams, WeightVector, WelfareParams,
};

use crate::output::fmt_num;
use crate::{
    CliError, CliResult, DecideArgs, Method, ProbArgs, ProfilesArg, RuleKind, ToleranceArgs,
    ValidityArg, WelfareArgs,
};

fn io(e: std::io::Error) -> CliError {
    CliError::runtime(e)
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> CliResult {
    let s = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    writeln!(out, "{s}").map_err(io)
}

/// Parses whitespace- or comma-separated numbers.
pub fn parse_numbers(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("`{s}` is not a number"))
        })
        .collect()
}

fn read_profiles_file(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Input)?;
    parse_numbers(&text).map_err(CliError::Input)
}

pub fn load_profiles(arg: &ProfilesArg) -> CliResult<Vec<f64>> {
    let profiles = match &arg.file {
        Some(path) => read_profiles_file(path)?,
        None => arg.profiles.clone(),
    };
    if profiles.is_empty() {
        return Err(CliError::input(anyhow!("no profiles given")));
    }
    Ok(profiles)
}

fn welfare(args: WelfareArgs) -> CliResult<WelfareParams<f64>> {
    WelfareParams::new(args.alpha, args.loss_reject_valid, args.loss_accept_invalid)
        .map_err(CliError::input)
}

#[derive(Debug, Serialize)]
pub struct WeightRow {
    pub profile: f64,
    pub raw_weight: f64,
    /// Absent when every weight is zero.
    pub normalized_weight: Option<f64>,
}

pub fn weight_table(profiles: &[f64]) -> CliResult<Vec<WeightRow>> {
    let raw = optimal_weights(profiles).map_err(CliError::input)?;
    let normalized = normalize_weights(&raw).ok();
    Ok(profiles
        .iter()
        .enumerate()
        .map(|(i, &p)| WeightRow {
            profile: p,
            raw_weight: raw.as_slice()[i],
            normalized_weight: normalized.as_ref().map(|w| w.as_slice()[i]),
        })
        .collect())
}

pub fn weights(args: &ProfilesArg, out: &mut dyn Write) -> CliResult {
    let rows = weight_table(&load_profiles(args)?)?;
    if args.json {
        return emit_json(out, &rows);
    }
    writeln!(
        out,
        "{:>10}  {:>12}  {:>12}",
        "profile", "raw", "normalized"
    )
    .map_err(io)?;
    for r in &rows {
        let norm = r
            .normalized_weight
            .map_or("-".to_string(), |w| format!("{w:.6}"));
        writeln!(
            out,
            "{:>10}  {:>12.6}  {:>12}",
            fmt_num(r.profile),
            r.raw_weight,
            norm
        )
        .map_err(io)?;
    }
    if rows.iter().all(|r| r.normalized_weight.is_none()) {
        writeln!(out, "every weight is zero; normalization is undefined").map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct QuotaReport {
    pub unclamped: f64,
    pub clamped: f64,
    pub total_weight: f64,
}

pub fn quota_report(profiles: &[f64], params: &WelfareParams<f64>) -> CliResult<QuotaReport> {
    let w = optimal_weights(profiles).map_err(CliError::input)?;
    Ok(QuotaReport {
        unclamped: optimal_quota_unclamped(&w, params).map_err(CliError::input)?,
        clamped: optimal_quota(&w, params).map_err(CliError::input)?.value(),
        total_weight: w.total(),
    })
}

pub fn quota(args: &ProfilesArg, welfare_args: WelfareArgs, out: &mut dyn Write) -> CliResult {
    let params = welfare(welfare_args)?;
    for warning in params.warnings() {
        eprintln!("warning: {warning}");
    }
    let report = quota_report(&load_profiles(args)?, &params)?;
    if args.json {
        return emit_json(out, &report);
    }
    writeln!(out, "optimal quota: {:.6}", report.clamped).map_err(io)?;
    writeln!(out, "unclamped:     {:.6}", report.unclamped).map_err(io)?;
    writeln!(out, "total weight:  {:.6}", report.total_weight).map_err(io)
}

#[derive(Debug, Serialize)]
pub struct ProbReport {
    pub rule: String,
    pub validity: BlockValidity,
    pub method: &'static str,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width_95: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binomial_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binomial_difference: Option<f64>,
}

/// `P(X ≥ k)` for `X ~ Bin(n, p)`.
pub fn binomial_tail(n: u64, k: u64, p: f64) -> f64 {
    (k..=n)
        .map(|j| {
            let c = (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
        })
        .sum()
}

fn build_rule(args: &ProbArgs, profiles: &[f64]) -> CliResult<(DecisionRule<f64>, String)> {
    let quota = || Quota::new(args.quota).map_err(CliError::input);
    Ok(match args.rule {
        RuleKind::Unweighted => (
            DecisionRule::unweighted(quota()?),
            format!("unweighted q={}", fmt_num(args.quota)),
        ),
        RuleKind::Weighted => {
            let w = match &args.weights {
                Some(w) => WeightVector::new(w.clone()).map_err(CliError::input)?,
                None => optimal_weights(profiles).map_err(CliError::input)?,
            };
            (
                DecisionRule::weighted(w, quota()?),
                format!("weighted q={}", fmt_num(args.quota)),
            )
        }
        RuleKind::Optimal => {
            let params = welfare(args.welfare)?;
            (
                DecisionRule::optimal(profiles, &params).map_err(CliError::input)?,
                "optimal".into(),
            )
        }
    })
}

pub fn prob_report(args: &ProbArgs) -> CliResult<ProbReport> {
    let profiles = load_profiles(&args.profiles)?;
    let (rule, name) = build_rule(args, &profiles)?;
    let validity = match args.validity {
        ValidityArg::Valid => BlockValidity::Valid,
        ValidityArg::Invalid => BlockValidity::Invalid,
    };
    let (probability, half_width, method) = match args.method {
        Method::Exact => (
            consensus_probability_exact(&profiles, &rule, validity).map_err(CliError::input)?,
            None,
            "exact",
        ),
        Method::Mc => {
            let est = consensus_probability_mc(&profiles, &rule, validity, args.trials, args.seed)
                .map_err(CliError::input)?;
            (est.probability, Some(est.half_width_95), "monte_carlo")
        }
    };
    let mut report = ProbReport {
        rule: name,
        validity,
        method,
        probability,
        half_width_95: half_width,
        binomial_tail: None,
        binomial_difference: None,
    };
    if args.condorcet_check {
        if args.rule != RuleKind::Unweighted || profiles.iter().any(|&p| p != profiles[0]) {
            return Err(CliError::input(anyhow!(
                "--condorcet-check needs identical profiles and --rule unweighted"
            )));
        }
        let n = profiles.len() as u64;
        // smallest approval count a with 2a - n ≥ (2q - 1) n
        let k = (0..=n)
            .find(|&a| (2 * a) as f64 - n as f64 >= (2.0 * args.quota - 1.0) * n as f64)
            .unwrap_or(n);
        let p = match validity {
            BlockValidity::Valid => profiles[0],
            BlockValidity::Invalid => 1.0 - profiles[0],
        };
        // on an invalid block the rule is right when approvals stay below k
        let tail = match validity {
            BlockValidity::Valid => binomial_tail(n, k, p),
            BlockValidity::Invalid => 1.0 - binomial_tail(n, k, p),
        };
        report.binomial_tail = Some(tail);
        report.binomial_difference = Some((probability - tail).abs());
    }
    Ok(report)
}

pub fn prob(args: &ProbArgs, out: &mut dyn Write) -> CliResult {
    let r = prob_report(args)?;
    if args.profiles.json {
        return emit_json(out, &r);
    }
    match r.half_width_95 {
        Some(h) => writeln!(
            out,
            "{} ({}): {:.6} ± {:.6}",
            r.rule, r.method, r.probability, h
        ),
        None => writeln!(out, "{} ({}): {:.6}", r.rule, r.method, r.probability),
    }
    .map_err(io)?;
    if let (Some(t), Some(d)) = (r.binomial_tail, r.binomial_difference) {
        writeln!(out, "binomial tail: {t:.12}  difference: {d:.3e}").map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DecideReport {
    pub outcome: weighted_voting::ConsensusOutcome,
    pub quota: f64,
    pub weighted_approval_fraction: f64,
}

pub fn decide_report(args: &DecideArgs) -> CliResult<DecideReport> {
    let votes = DecisionProfile::from_signs(&args.votes).map_err(CliError::input)?;
    let weights = match (&args.weights, &args.profiles) {
        (Some(w), _) => WeightVector::new(w.clone()).map_err(CliError::input)?,
        (None, Some(p)) => optimal_weights(p).map_err(CliError::input)?,
        (None, None) => WeightVector::uniform(votes.len()),
    };
    let quota = if args.quota == "optimal" {
        let params = welfare(args.welfare)?;
        if args.profiles.is_none() {
            return Err(CliError::input(anyhow!("--quota optimal needs --profiles")));
        }
        optimal_quota(&weights, &params).map_err(CliError::input)?
    } else {
        let q: f64 = args.quota.parse().map_err(|_| {
            CliError::input(anyhow!(
                "--quota: `{}` is neither a number nor `optimal`",
                args.quota
            ))
        })?;
        Quota::new(q).map_err(CliError::input)?
    };
    let outcome =
        weighted_voting::weighted_decision(&votes, &weights, quota).map_err(CliError::input)?;
    let fraction =
        weighted_voting::weighted_approval_fraction(&votes, &weights).map_err(CliError::input)?;
    Ok(DecideReport {
        outcome,
        quota: quota.value(),
        weighted_approval_fraction: fraction,
    })
}

pub fn decide(args: &DecideArgs, out: &mut dyn Write) -> CliResult {
    let r = decide_report(args)?;
    if args.json {
        return emit_json(out, &r);
    }
    let verdict = if r.outcome.is_approve() {
        "approve"
    } else {
        "reject"
    };
    writeln!(
        out,
        "{verdict} (weighted approval {:.6}, quota {:.6})",
        r.weighted_approval_fraction, r.quota
    )
    .map_err(io)
}

#[derive(Debug, Serialize)]
pub struct ToleranceReport {
    pub c1: f64,
    pub c2: f64,
    pub minimum_correct_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
}

pub fn tolerance_report(args: &ToleranceArgs) -> CliResult<ToleranceReport> {
    let params = UpdateParams {
        delta: args.delta,
        loss_reject_valid: args.loss_reject_valid,
        loss_accept_invalid: args.loss_accept_invalid,
        ..UpdateParams::protocol_defaults()
    };
    let t = tolerance_constants(&params).map_err(CliError::input)?;
    let verdict = match (args.q, args.q1) {
        (Some(q), Some(q1)) => {
            let mix = BehaviorMix::new(q, q1).map_err(CliError::input)?;
            Some(if t.sustains(&mix) {
                "sustains"
            } else {
                "degrades"
            })
        }
        _ => None,
    };
    Ok(ToleranceReport {
        c1: t.c1,
        c2: t.c2,
        minimum_correct_fraction: t.minimum_correct_fraction(),
        verdict,
    })
}

pub fn tolerance(args: &ToleranceArgs, out: &mut dyn Write) -> CliResult {
    let r = tolerance_report(args)?;
    if args.json {
        return emit_json(out, &r);
    }
    writeln!(out, "c1: {:.6}", r.c1).map_err(io)?;
    writeln!(out, "c2: {:.6}", r.c2).map_err(io)?;
    writeln!(
        out,
        "minimum correct fraction: {:.6}",
        r.minimum_correct_fraction
    )
    .map_err(io)?;
    if let Some(v) = r.verdict {
        writeln!(out, "verdict: {v}").map_err(io)?;
    }
    Ok(())
}
