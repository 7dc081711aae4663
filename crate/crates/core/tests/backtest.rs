use std::collections::BTreeMap;
use std::sync::Mutex;

use subprice::backtest::{
    clv, compare_strategies, compliance_rate, run_backtest, BacktestProtocol, CompareConfig,
    DemandForecaster, Forecaster, IntervalForecast, StrategyKind, StrategySpec,
};
use subprice::churn::ChurnModel;
use subprice::elasticity::ElasticityConfig;
use subprice::forecast::ForecastConfig;
use subprice::panel::{build_panel, SegmentSeries, SplitSpec, SubscriptionPanel};
use subprice::synthgen::{default_churn_truth, generate_population, GenConfig};
use subprice::Error;

fn panel(n_segments: usize, n_periods: usize, seed: u64) -> SubscriptionPanel {
    generate_population(&GenConfig {
        n_segments,
        n_periods,
        seed,
        ..Default::default()
    })
    .unwrap()
    .0
}

/// Looks the answer up in the full panel.
struct Oracle(SubscriptionPanel);

impl Forecaster for Oracle {
    fn forecast(
        &self,
        history: &SegmentSeries,
        periods: &[i64],
        _: &[Vec<f64>],
        _: u64,
    ) -> subprice::Result<IntervalForecast> {
        let recs = self.0.segment_records(&history.segment)?;
        let mean: Vec<f64> = periods
            .iter()
            .map(|t| recs.iter().find(|r| r.period == *t).unwrap().quantity as f64)
            .collect();
        Ok(IntervalForecast {
            lower: mean.clone(),
            upper: mean.clone(),
            mean,
        })
    }
}

/// Records every forecast it makes, keyed by segment and first period.
struct Recording<F> {
    inner: F,
    seen: Mutex<BTreeMap<(String, i64), Vec<f64>>>,
}

impl<F: Forecaster> Forecaster for Recording<F> {
    fn forecast(
        &self,
        history: &SegmentSeries,
        periods: &[i64],
        future: &[Vec<f64>],
        seed: u64,
    ) -> subprice::Result<IntervalForecast> {
        let fc = self.inner.forecast(history, periods, future, seed)?;
        self.seen
            .lock()
            .unwrap()
            .insert((history.segment.clone(), periods[0]), fc.mean.clone());
        Ok(fc)
    }
}

fn small_forecaster() -> DemandForecaster {
    DemandForecaster {
        config: ForecastConfig::default(),
        n_draws: 100,
        level: 0.9,
    }
}

// ---------------------------------------------------------------------------
// Rolling-origin backtests
// ---------------------------------------------------------------------------

#[test]
fn monthly_refits_over_a_three_period_test_span() {
    let p = panel(3, 18, 1);
    let report = run_backtest(&p, &BacktestProtocol::default(), &Oracle(p.clone()), 0).unwrap();
    assert_eq!(report.windows.len(), 3);
    assert_eq!(
        report.windows.iter().map(|w| w.origin).collect::<Vec<_>>(),
        vec![16, 17, 18]
    );
    for w in &report.windows {
        assert_eq!(w.metrics.mape, 0.0);
        assert_eq!(w.metrics.rmse, 0.0);
        assert_eq!(w.metrics.icp, 1.0);
    }
}

#[test]
fn horizon_beyond_test_span_is_rejected() {
    let p = panel(2, 18, 1);
    let protocol = BacktestProtocol {
        horizon: 4,
        ..Default::default()
    };
    assert!(matches!(
        run_backtest(&p, &protocol, &Oracle(p.clone()), 0),
        Err(Error::SpanTooShort(_))
    ));
    let short = panel(2, 12, 1);
    assert!(matches!(
        run_backtest(
            &short,
            &BacktestProtocol::default(),
            &Oracle(short.clone()),
            0
        ),
        Err(Error::SpanTooShort(_))
    ));
}

#[test]
fn later_data_never_reaches_a_window() {
    let p = panel(2, 36, 2);
    let protocol = BacktestProtocol {
        split: SplitSpec {
            train_periods: 30,
            val_periods: 0,
            test_periods: 6,
        },
        horizon: 2,
        refit_every: 2,
    };
    let run = |panel: &SubscriptionPanel| {
        let f = Recording {
            inner: small_forecaster(),
            seen: Mutex::new(BTreeMap::new()),
        };
        run_backtest(panel, &protocol, &f, 9).unwrap();
        f.seen.into_inner().unwrap()
    };
    let clean = run(&p);
    assert_eq!(clean.len(), 2 * 3);
    for origin in [31, 33, 35] {
        // Reverse each segment's quantities and covariates from the origin on.
        let mut records = p.records().to_vec();
        for seg in p.segments() {
            let idx: Vec<usize> = (0..records.len())
                .filter(|&i| &records[i].segment_id == seg && records[i].period >= origin)
                .collect();
            let (q, cov): (Vec<u64>, Vec<_>) = idx
                .iter()
                .map(|&i| (records[i].quantity, records[i].covariates.clone()))
                .unzip();
            for (k, &i) in idx.iter().enumerate() {
                records[i].quantity = q[q.len() - 1 - k] * 3 + 7;
                records[i].covariates = cov[cov.len() - 1 - k].clone();
            }
        }
        let mutated = build_panel(records, p.schema().clone()).unwrap();
        let dirty = run(&mutated);
        for ((seg, start), mean) in &clean {
            if *start <= origin {
                assert_eq!(
                    mean,
                    &dirty[&(seg.clone(), *start)],
                    "{seg} window {start} saw data from {origin}"
                );
            }
        }
    }
}

#[test]
fn backtests_are_reproducible() {
    let p = panel(2, 36, 3);
    let protocol = BacktestProtocol {
        split: SplitSpec {
            train_periods: 30,
            val_periods: 3,
            test_periods: 3,
        },
        ..Default::default()
    };
    let a = run_backtest(&p, &protocol, &small_forecaster(), 4).unwrap();
    let b = run_backtest(&p, &protocol, &small_forecaster(), 4).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a.aggregate.mape.is_finite() && a.aggregate.mape > 0.0);
}

// ---------------------------------------------------------------------------
// Strategy comparison
// ---------------------------------------------------------------------------

fn quick_cfg(seed: u64) -> CompareConfig {
    CompareConfig {
        elasticity: ElasticityConfig {
            n_draws: 600,
            n_burnin: 200,
            ..Default::default()
        },
        n_paths: 5,
        seed,
        ..Default::default()
    }
}

#[test]
fn static_against_itself_has_no_lift() {
    let (history, truth) = generate_population(&GenConfig {
        n_segments: 4,
        ..Default::default()
    })
    .unwrap();
    let specs = vec![
        StrategySpec::new(StrategyKind::StaticTiered),
        StrategySpec::new(StrategyKind::StaticTiered),
    ];
    let report = compare_strategies(
        &truth,
        &history,
        &specs,
        &BacktestProtocol::default(),
        &quick_cfg(0),
    )
    .unwrap();
    for r in &report.strategies {
        assert_eq!(
            (r.revenue_lift_pct, r.margin_impact_pct, r.clv_change_pct),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(r.compliance_rate, None);
    }
}

#[test]
fn comparison_needs_a_static_baseline() {
    let (history, truth) = generate_population(&GenConfig {
        n_segments: 2,
        ..Default::default()
    })
    .unwrap();
    let specs = vec![StrategySpec::new(StrategyKind::UniformUplift)];
    assert!(matches!(
        compare_strategies(
            &truth,
            &history,
            &specs,
            &BacktestProtocol::default(),
            &quick_cfg(0)
        ),
        Err(Error::NoBaseline)
    ));
}

#[test]
fn steep_uplift_on_price_sensitive_customers_raises_churn() {
    let churn = ChurnModel {
        theta0: -6.0,
        theta1: 0.1,
        ..default_churn_truth(true)
    };
    let (history, truth) = generate_population(&GenConfig {
        n_segments: 6,
        churn: Some(churn),
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let specs = vec![
        StrategySpec::new(StrategyKind::StaticTiered),
        StrategySpec {
            uplift_pct: Some(0.30),
            ..StrategySpec::new(StrategyKind::UniformUplift)
        },
    ];
    let report = compare_strategies(
        &truth,
        &history,
        &specs,
        &BacktestProtocol::default(),
        &quick_cfg(0),
    )
    .unwrap();
    let base = report.get(StrategyKind::StaticTiered).unwrap();
    let up = report.get(StrategyKind::UniformUplift).unwrap();
    assert!(
        up.churn_rate > base.churn_rate,
        "{} vs {}",
        up.churn_rate,
        base.churn_rate
    );
    assert!(up.clv_change_pct.is_finite());
    assert_eq!(up.uplift_pct, Some(30.0));
}

#[test]
fn standard_comparison_is_reproducible_and_compliant() {
    let (history, truth) = generate_population(&GenConfig {
        n_segments: 8,
        ..Default::default()
    })
    .unwrap();
    let run = || {
        compare_strategies(
            &truth,
            &history,
            &StrategySpec::standard(),
            &BacktestProtocol::default(),
            &quick_cfg(1),
        )
        .unwrap()
    };
    let a = run();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&run()).unwrap()
    );
    assert_eq!(a.strategies.len(), 4);
    let g = a.get(StrategyKind::Guardrailed).unwrap();
    assert_eq!(g.compliance_rate, Some(1.0));
    let table = a.to_text_table();
    for name in [
        "static_tiered",
        "uniform_uplift",
        "elasticity",
        "guardrailed",
    ] {
        assert!(table.contains(name));
    }
}

#[test]
fn invalid_uplift_is_rejected() {
    let (history, truth) = generate_population(&GenConfig {
        n_segments: 2,
        ..Default::default()
    })
    .unwrap();
    let specs = vec![
        StrategySpec::new(StrategyKind::StaticTiered),
        StrategySpec {
            uplift_pct: Some(-1.0),
            ..StrategySpec::new(StrategyKind::UniformUplift)
        },
    ];
    assert!(matches!(
        compare_strategies(
            &truth,
            &history,
            &specs,
            &BacktestProtocol::default(),
            &quick_cfg(0)
        ),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn clv_behaves_at_its_limits() {
    assert!((clv(30.0, 10.0, 0.02, 0.0).unwrap() - 980.0).abs() < 1e-9);
    assert_eq!(clv(30.0, 10.0, 1.0, 0.01).unwrap(), 0.0);
    let mut last = f64::INFINITY;
    for k in 1..=20 {
        let v = clv(30.0, 10.0, 0.01 * k as f64, 0.01).unwrap();
        assert!(v < last);
        last = v;
    }
    assert!(clv(30.0, 10.0, 1.5, 0.0).is_err());
    assert!(clv(30.0, 10.0, 0.1, -0.1).is_err());
}

#[test]
fn compliance_is_measured_per_segment() {
    use subprice::optimizer::{PricingProblem, SegmentProblem};
    let seg = |id: &str| SegmentProblem {
        id: id.into(),
        tier: None,
        log_scale: 9.0,
        beta: -2.0,
        unit_cost: 10.0,
        churn_intercept: -3.0,
        churn_slope: 0.05,
        churn_max: 0.1,
        volume_min: 0.0,
        price_lo: 5.0,
        price_hi: 50.0,
    };
    let problem = PricingProblem::new(vec![seg("a"), seg("b")], 0.0, vec![]).unwrap();
    // Churn at 30 is about 18%, above the 10% cap.
    let prices = BTreeMap::from([("a".to_string(), 15.0), ("b".to_string(), 30.0)]);
    assert_eq!(compliance_rate(&problem, &prices, 1e-4), 0.5);
}
