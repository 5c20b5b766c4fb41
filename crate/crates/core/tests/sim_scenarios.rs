use weighted_voting::sim::{
    approval_series, profile_series, recovery_slot, run_scenario, QuotaPolicy, ScenarioConfig,
    ValidityPolicy,
};

const CAP: f64 = 1.0 - 1e-5;

fn blocked(v: f64, delta: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        adversary_fraction: v,
        horizon: 400,
        ..Default::default()
    };
    c.update.delta = delta;
    c
}

#[test]
fn blocked_minority_scenarios_recover() {
    for v in [0.4, 0.5, 0.6] {
        let mut crossings = Vec::new();
        for delta in [1e-3, 2e-3] {
            let records = run_scenario(&blocked(v, delta)).unwrap();
            let approval = approval_series(&records);
            assert!(approval.windows(2).all(|w| w[1] >= w[0]), "v={v} δ={delta}");
            assert!((approval[0] - (1.0 - v)).abs() < 1e-12);

            let crossing = recovery_slot(&records).expect("crosses 2/3");
            crossings.push(crossing);

            // the last voter index is honest; once it hits the cap the
            // curve flattens abruptly
            let cap = profile_series(&records, 99)
                .iter()
                .position(|&p| p == CAP)
                .unwrap();
            let before = approval[cap + 1] - approval[cap];
            let after = approval[cap + 2] - approval[cap + 1];
            assert!(
                after < 1e-3 * before,
                "v={v} δ={delta}: {before} then {after}"
            );
        }
        assert!(crossings[1] < crossings[0], "v={v}: {crossings:?}");
    }
}

#[test]
fn mild_update_timings() {
    let records = run_scenario(&blocked(0.4, 1e-3)).unwrap();
    assert_eq!(recovery_slot(&records), Some(53));
    let cap = profile_series(&records, 99).iter().position(|&p| p == CAP);
    assert_eq!(cap, Some(105));
}

#[test]
fn abstainers_decay_slowly() {
    let records = run_scenario(&blocked(0.4, 1e-3)).unwrap();
    let abstainer = profile_series(&records, 0);
    assert!(abstainer.windows(2).all(|w| w[1] < w[0]));
    let expected = 0.9 * 0.999f64.powf(0.01 * 400.0);
    assert!((abstainer.last().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn reruns_are_identical() {
    let mut config = blocked(0.5, 2e-3);
    config.validity = ValidityPolicy::Prior;
    config.quota = QuotaPolicy::Optimal;
    config.seed = 99;
    assert_eq!(
        run_scenario(&config).unwrap(),
        run_scenario(&config).unwrap()
    );
}

#[test]
fn seeds_matter_only_when_randomness_is_used() {
    let a = run_scenario(&blocked(0.4, 1e-3)).unwrap();
    let b = run_scenario(&ScenarioConfig {
        seed: 7,
        ..blocked(0.4, 1e-3)
    })
    .unwrap();
    assert_eq!(approval_series(&a), approval_series(&b));

    let prior = |seed| ScenarioConfig {
        validity: ValidityPolicy::Prior,
        seed,
        ..blocked(0.4, 1e-3)
    };
    let x = run_scenario(&prior(1)).unwrap();
    let y = run_scenario(&prior(2)).unwrap();
    assert_ne!(
        x.iter().map(|r| r.block_validity).collect::<Vec<_>>(),
        y.iter().map(|r| r.block_validity).collect::<Vec<_>>()
    );
}
