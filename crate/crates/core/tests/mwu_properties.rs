use proptest::prelude::*;
use weighted_voting::{
    minimum_correct_fraction, mwu_update, raw_update, run_trajectory, sustains_profile,
    tolerance_constants, BehaviorMix, ScheduleKind, UpdateParams, VoteClassification,
    VotingProfile,
};

fn params(delta: f64, lr: f64, la: f64) -> UpdateParams<f64> {
    UpdateParams {
        delta,
        loss_reject_valid: lr,
        loss_accept_invalid: la,
        ..UpdateParams::protocol_defaults()
    }
}

/// `p_T - p_0` for the unclamped trajectory
/// `p_T = ((1+δ)^q (1-δ)^{ℓ_r q1 + ℓ_a (1-q-q1)})^T p_0`.
fn closed_form_change(p0: f64, q: f64, q1: f64, p: &UpdateParams<f64>, horizon: f64) -> f64 {
    let rest = (1.0 - q - q1).max(0.0);
    let per_slot = q * p.delta.ln_1p()
        + (p.loss_reject_valid * q1 + p.loss_accept_invalid * rest) * (-p.delta).ln_1p();
    p0 * (horizon * per_slot).exp_m1()
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    (0..=20u32).flat_map(|i| (0..=20 - i).map(move |j| (i as f64 / 20.0, j as f64 / 20.0)))
}

#[test]
fn sustain_condition_matches_closed_form_trajectory() {
    let mut checked = 0;
    for delta in [1e-3, 1e-2, 1e-1] {
        for la in [1.0, 12.0] {
            for lr in [1e-2, 0.5] {
                let p = params(delta, lr, la);
                for (q, q1) in grid() {
                    let change = closed_form_change(0.9, q, q1, &p, 1e4);
                    if change.abs() <= 1e-12 {
                        continue;
                    }
                    let mix = BehaviorMix::new(q, q1).unwrap();
                    assert_eq!(
                        sustains_profile(&mix, &p).unwrap(),
                        change > 0.0,
                        "δ={delta} ℓ_r={lr} ℓ_a={la} q={q} q1={q1}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 2500);
}

#[test]
fn sustaining_mixes_clear_the_minimum_fraction() {
    for delta in [1e-3, 1e-2, 1e-1] {
        for (lr, la) in [(1e-2, 12.0), (0.5, 12.0), (1e-2, 1.0), (0.5, 1.0)] {
            let p = params(delta, lr, la);
            let bound = minimum_correct_fraction(&p).unwrap();
            for (q, q1) in grid() {
                if sustains_profile(&BehaviorMix::new(q, q1).unwrap(), &p).unwrap() {
                    assert!(
                        q >= bound - 1e-12,
                        "q={q} q1={q1} sustains below the bound {bound}"
                    );
                }
            }
        }
    }
}

#[test]
fn simulated_schedule_agrees_with_sustain_condition() {
    // 80/10/10 degrades at δ = 10⁻³; 95/5/0 improves
    let p = params(1e-3, 1e-2, 12.0);
    for (q, q1, improves) in [(0.8, 0.1, false), (0.95, 0.05, true), (0.97, 0.0, true)] {
        let mix = BehaviorMix::new(q, q1).unwrap();
        assert_eq!(sustains_profile(&mix, &p).unwrap(), improves);
        let schedule: Vec<_> = mix
            .schedule(ScheduleKind::Periodic, 2000, 0)
            .into_iter()
            .map(|a| a.mix_classification())
            .collect();
        let mut raw = 0.7;
        for &cls in &schedule {
            raw = raw_update(raw, cls, &p);
        }
        assert_eq!(raw > 0.7, improves, "q={q} q1={q1}");
    }
}

fn classification() -> impl Strategy<Value = VoteClassification> {
    prop_oneof![
        Just(VoteClassification::Correct),
        Just(VoteClassification::AbstainedOrRejectedValid),
        Just(VoteClassification::ApprovedInvalid),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn updates_stay_in_range(p0 in 0.5f64..0.99999, cls in classification(), delta in 1e-4f64..0.9, lr in 1e-3f64..5.0, la in 1e-3f64..30.0) {
        let params = params(delta, lr, la);
        let p = mwu_update(VotingProfile::new(p0, 1e-5).unwrap(), cls, &params).value();
        prop_assert!((0.5..=1.0 - 1e-5).contains(&p));
    }

    #[test]
    fn constants_lie_in_unit_interval(delta in 1e-6f64..0.99, lr in 1e-3f64..10.0, extra in 1e-3f64..20.0) {
        let p = params(delta, lr, lr + extra);
        let t = tolerance_constants(&p).unwrap();
        prop_assert!(t.c1 > 0.0 && t.c1 < 1.0);
        prop_assert!(t.c2 > 0.0 && t.c2 < 1.0);
        let bound = t.minimum_correct_fraction();
        prop_assert!(bound >= 0.0 && bound <= t.c1 + 1e-15);
    }

    #[test]
    fn unclamped_updates_commute(schedule in prop::collection::vec(classification(), 1..40), seed in any::<u64>()) {
        // small steps from 0.75 keep every prefix inside (0.5, 1 - ε)
        let p = params(1e-3, 0.5, 1.0);
        let start = VotingProfile::new(0.75, 1e-5).unwrap();
        let mut shuffled = schedule.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = run_trajectory(start, &schedule, &p).last().unwrap().value();
        let b = run_trajectory(start, &shuffled, &p).last().unwrap().value();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

/// Coefficient of determination of a least-squares line through `ys`.
fn r_squared(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
        syy += (y - ym) * (y - ym);
    }
    sxy * sxy / (sxx * syy)
}

fn mix_trajectory(p0: f64, q: f64, q1: f64, delta: f64, len: usize) -> Vec<f64> {
    let schedule: Vec<_> = BehaviorMix::new(q, q1)
        .unwrap()
        .schedule(ScheduleKind::Periodic, len, 0)
        .into_iter()
        .map(|a| a.mix_classification())
        .collect();
    run_trajectory(
        VotingProfile::new(p0, 1e-5).unwrap(),
        &schedule,
        &params(delta, 1e-2, 12.0),
    )
    .into_iter()
    .map(|p| p.value())
    .collect()
}

#[test]
fn irregular_voter_declines() {
    for delta in [1e-2, 2e-2] {
        let path = mix_trajectory(0.9, 0.8, 0.1, delta, 10_000);
        assert!(path.last().unwrap() < &0.9);
        let tail_min = path[path.len() - 1000..]
            .iter()
            .cloned()
            .fold(1.0, f64::min);
        assert_eq!(tail_min, 0.5, "keeps hitting the floor");
        let early: f64 = path[..500].iter().sum::<f64>() / 500.0;
        let late: f64 = path[path.len() - 500..].iter().sum::<f64>() / 500.0;
        assert!(late < early);
    }
}

#[test]
fn recovering_voter_climbs_roughly_linearly() {
    let mut slots_to_cap = Vec::new();
    for delta in [1e-3, 2e-2] {
        let path = mix_trajectory(0.5, 0.95, 0.05, delta, 10_000);
        let cap = 1.0 - 1e-5;
        let hit = path
            .iter()
            .position(|&p| p == cap)
            .expect("reaches the cap");
        assert!(r_squared(&path[..hit]) > 0.98, "δ={delta}");
        slots_to_cap.push(hit);
    }
    assert!(slots_to_cap[1] < slots_to_cap[0]);
}
