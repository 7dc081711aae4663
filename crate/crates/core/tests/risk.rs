use subprice::risk::{
    early_warning, run_stress, standard_scenarios, AlertConfig, AlertMetric, FixedPolicy,
    PricingPolicy, ScenarioKind, ScenarioSpec, SeverityLabel, StressConfig, UniformUplift,
};
use subprice::synthgen::{
    generate_population, GenConfig, GroundTruth, PriceSchedule, RealizedOutcomes, SegmentOutcome,
};
use subprice::Error;

fn market(seed: u64) -> GroundTruth {
    generate_population(&GenConfig {
        n_segments: 5,
        n_periods: 24,
        seed,
        ..Default::default()
    })
    .unwrap()
    .1
}

fn status_quo(truth: &GroundTruth) -> FixedPolicy {
    FixedPolicy {
        name: "static".into(),
        schedule: PriceSchedule::constant(
            truth
                .segments
                .iter()
                .map(|s| (s.segment_id.clone(), s.last_price)),
        ),
    }
}

fn cfg() -> StressConfig {
    StressConfig {
        n_mc: 100,
        horizon: 3,
        seed: 5,
    }
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

#[test]
fn zero_severity_leaves_the_index_at_one() {
    let truth = market(1);
    let fixed = status_quo(&truth);
    let scenarios: Vec<ScenarioSpec> = ScenarioKind::ALL
        .iter()
        .map(|&k| ScenarioSpec::new(k, 0.0, SeverityLabel::Mild).unwrap())
        .collect();
    let env = run_stress(&truth, &[&fixed], &scenarios, &cfg()).unwrap();
    for c in &env.cells {
        assert_eq!(c.performance_index, 1.0, "{}", c.scenario);
    }
    assert_eq!(env.baseline[0].performance_index, 1.0);
}

#[test]
fn demand_downturn_scales_profit_without_churn_feedback() {
    let mut truth = market(2);
    truth.churn_params.theta1 = 0.0;
    truth.churn_params.theta2 = 0.0;
    let fixed = status_quo(&truth);
    let s = ScenarioSpec::new(ScenarioKind::DemandDownturn, 0.2, SeverityLabel::Severe).unwrap();
    let env = run_stress(&truth, &[&fixed], &[s], &cfg()).unwrap();
    let pi = env.cells[0].performance_index;
    assert!((pi - 0.8).abs() < 0.005, "index {pi}");
}

#[test]
fn index_is_monotone_along_the_ladder() {
    let truth = market(3);
    let fixed = status_quo(&truth);
    let up = UniformUplift::new(0.05);
    let policies: [&dyn PricingPolicy; 2] = [&fixed, &up];
    let env = run_stress(&truth, &policies, &standard_scenarios(), &cfg()).unwrap();
    assert_eq!(env.cells.len(), 9 * 2);
    for strategy in ["static", "uniform_uplift"] {
        for kind in ScenarioKind::ALL {
            let ladder: Vec<_> = SeverityLabel::LADDER
                .iter()
                .map(|l| {
                    env.cell(&format!("{kind}/{}", l.as_str()), strategy)
                        .unwrap()
                })
                .collect();
            let mut prev = (1.0, 0.0);
            for c in ladder {
                let se = (c.performance_index_se.powi(2) + prev.1 * prev.1).sqrt();
                assert!(
                    c.performance_index <= prev.0 + 2.0 * se,
                    "{strategy} {}",
                    c.scenario
                );
                prev = (c.performance_index, c.performance_index_se);
            }
        }
    }
    for c in env.baseline.iter().chain(&env.cells) {
        assert!(c.profit.p5 <= c.profit.mean && c.profit.mean <= c.profit.p95);
        assert!(c.churn.p5 <= c.churn.p95);
        assert!(c.performance_index >= 0.0);
    }
}

#[test]
fn stress_runs_are_reproducible() {
    let truth = market(4);
    let fixed = status_quo(&truth);
    let up = UniformUplift::new(0.1);
    let policies: [&dyn PricingPolicy; 2] = [&fixed, &up];
    let a = run_stress(&truth, &policies, &standard_scenarios(), &cfg()).unwrap();
    let b = run_stress(&truth, &policies, &standard_scenarios(), &cfg()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 + 18);
    assert!(a.to_text_table().contains("competitor_cut/severe"));
}

#[test]
fn too_few_draws_is_a_config_error() {
    let truth = market(1);
    let fixed = status_quo(&truth);
    let r = run_stress(
        &truth,
        &[&fixed],
        &standard_scenarios(),
        &StressConfig { n_mc: 99, ..cfg() },
    );
    assert!(matches!(r, Err(Error::InvalidConfig(_))));
}

#[test]
fn severities_outside_unit_interval_are_rejected() {
    assert!(ScenarioSpec::new(ScenarioKind::CostInflation, 1.5, SeverityLabel::Severe).is_err());
    assert!(matches!(
        "tariff".parse::<ScenarioKind>(),
        Err(Error::UnknownScenarioKind(_))
    ));
}

// ---------------------------------------------------------------------------
// Early warning
// ---------------------------------------------------------------------------

fn observed(churned: &[u64], profit: &[f64]) -> RealizedOutcomes {
    let n = churned.len();
    RealizedOutcomes {
        horizon: n,
        segments: vec![SegmentOutcome {
            segment_id: "s".into(),
            periods: (1..=n as i64).collect(),
            prices: vec![20.0; n],
            quantity: vec![1000; n],
            churned: churned.to_vec(),
            revenue: vec![20_000.0; n],
            profit: profit.to_vec(),
            covariates: vec![vec![]; n],
            tenure: vec![0.0; n],
            unit_cost: 10.0,
        }],
    }
}

#[test]
fn flat_outcomes_raise_no_alerts() {
    let obs = observed(&[30; 12], &[100.0; 12]);
    assert!(early_warning(None, &obs, &AlertConfig::default())
        .unwrap()
        .is_empty());
}

#[test]
fn churn_step_alerts_at_its_onset_only() {
    let mut churned = vec![30; 12];
    // 3% -> 7%: twice the 2-point threshold, starting at period 7.
    churned[6..].iter_mut().for_each(|c| *c = 70);
    let alerts = early_warning(
        None,
        &observed(&churned, &[100.0; 12]),
        &AlertConfig::default(),
    )
    .unwrap();
    assert_eq!(alerts.len(), 1);
    assert_eq!(alerts[0].metric, AlertMetric::ChurnSpike);
    assert_eq!(alerts[0].trigger_period, 7);
    assert!((alerts[0].value - 0.07).abs() < 1e-12);
    assert!((alerts[0].baseline - 0.03).abs() < 1e-12);
}

#[test]
fn drawdown_exactly_at_threshold_fires() {
    let mut profit = vec![100.0; 8];
    profit[5] = 85.0;
    let alerts =
        early_warning(None, &observed(&[30; 8], &profit), &AlertConfig::default()).unwrap();
    assert_eq!(alerts.len(), 1);
    assert_eq!(alerts[0].metric, AlertMetric::ProfitDrawdown);
    assert_eq!(alerts[0].trigger_period, 6);

    profit[5] = 85.01;
    assert!(
        early_warning(None, &observed(&[30; 8], &profit), &AlertConfig::default())
            .unwrap()
            .is_empty()
    );
}

#[test]
fn alerts_point_to_the_nearest_scenario() {
    let truth = market(6);
    let fixed = status_quo(&truth);
    let env = run_stress(&truth, &[&fixed], &standard_scenarios(), &cfg()).unwrap();
    let mut profit = vec![100.0; 8];
    profit[5] = 60.0;
    let alerts = early_warning(
        Some(&env),
        &observed(&[30; 8], &profit),
        &AlertConfig::default(),
    )
    .unwrap();
    let nearest = alerts[0].nearest_scenario.as_deref().unwrap();
    assert!(env.cells.iter().any(|c| c.scenario == nearest));
}

#[test]
fn short_observation_windows_are_rejected() {
    let obs = observed(&[30; 3], &[100.0; 3]);
    assert!(matches!(
        early_warning(None, &obs, &AlertConfig::default()),
        Err(Error::SpanTooShort(_))
    ));
    let bad = AlertConfig {
        lead_periods: 0,
        ..Default::default()
    };
    assert!(matches!(
        early_warning(None, &observed(&[30; 8], &[100.0; 8]), &bad),
        Err(Error::InvalidConfig(_))
    ));
}
