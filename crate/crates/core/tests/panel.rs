use std::collections::BTreeMap;

use proptest::prelude::*;
use subprice::panel::{
    aggregate_segment, build_panel, chronological_split, preprocess, read_csv, write_csv,
    FeatureKind, FeatureSchema, FeatureValue, PrepConfig, SplitSpec, SubscriptionPanel,
    SubscriptionRecord,
};
use subprice::Error;

fn schema() -> FeatureSchema {
    FeatureSchema::new([
        ("usage", FeatureKind::Numeric),
        ("plan", FeatureKind::Categorical),
    ])
}

fn record(
    segment: &str,
    period: i64,
    usage: FeatureValue,
    plan: FeatureValue,
) -> SubscriptionRecord {
    SubscriptionRecord {
        segment_id: segment.into(),
        period,
        price: 20.0,
        quantity: 100,
        unit_cost: 8.0,
        churned: 3,
        tenure: 4.0,
        covariates: BTreeMap::from([("usage".to_string(), usage), ("plan".to_string(), plan)]),
    }
}

fn plain(segment: &str, period: i64) -> SubscriptionRecord {
    record(
        segment,
        period,
        FeatureValue::Num(1.0),
        FeatureValue::Cat("pro".into()),
    )
}

fn uniform_panel(segments: usize, periods: i64) -> SubscriptionPanel {
    let records = (0..segments)
        .flat_map(|s| (1..=periods).map(move |t| plain(&format!("s{s}"), t)))
        .collect();
    build_panel(records, schema()).unwrap()
}

// ---------------------------------------------------------------------------
// Construction and lookup
// ---------------------------------------------------------------------------

#[test]
fn two_periods_of_one_segment() {
    let p = build_panel(vec![plain("a", 2), plain("a", 1)], schema()).unwrap();
    assert_eq!(p.segments(), ["a"]);
    assert_eq!(p.period_span(), 2);
    assert_eq!(p.segment_records("a").unwrap()[0].period, 1);
}

#[test]
fn construction_errors() {
    assert!(matches!(
        build_panel(vec![plain("a", 1), plain("a", 1)], schema()),
        Err(Error::DuplicateKey { .. })
    ));
    let mut extra = plain("a", 1);
    extra
        .covariates
        .insert("region".into(), FeatureValue::Cat("eu".into()));
    assert!(matches!(
        build_panel(vec![extra], schema()),
        Err(Error::SchemaMismatch(_))
    ));
}

#[test]
fn aggregation_examples() {
    let p = build_panel(vec![plain("a", 1), plain("b", 1), plain("b", 2)], schema()).unwrap();
    let a = aggregate_segment(&p, "a", None).unwrap();
    assert_eq!(a.len(), 1);
    assert!((a.points[0].churn_rate - 0.03).abs() < 1e-15);
    assert_eq!(
        aggregate_segment(&p, "b", Some(1)).unwrap().points[0].period,
        2
    );
    assert!(matches!(
        aggregate_segment(&p, "zzz", None),
        Err(Error::UnknownSegment(_))
    ));
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

#[test]
fn twelve_three_three_on_eighteen_periods() {
    let (train, val, test) =
        chronological_split(&uniform_panel(2, 18), &SplitSpec::default()).unwrap();
    assert_eq!(train.period_range(), Some((1, 12)));
    assert_eq!(val.period_range(), Some((13, 15)));
    assert_eq!(test.period_range(), Some((16, 18)));
}

#[test]
fn oversized_or_testless_splits_are_rejected() {
    let p = uniform_panel(1, 18);
    let spec = SplitSpec {
        train_periods: 12,
        val_periods: 3,
        test_periods: 6,
    };
    assert!(matches!(
        chronological_split(&p, &spec),
        Err(Error::SpanTooShort(_))
    ));
    let spec = SplitSpec {
        train_periods: 18,
        val_periods: 0,
        test_periods: 0,
    };
    assert!(matches!(
        chronological_split(&p, &spec),
        Err(Error::SpanTooShort(_))
    ));
}

proptest! {
    #[test]
    fn splits_are_ordered_and_disjoint(span in 3i64..40, train in 1usize..20, val in 0usize..8, test in 1usize..8) {
        let p = uniform_panel(2, span);
        let spec = SplitSpec { train_periods: train, val_periods: val, test_periods: test };
        match chronological_split(&p, &spec) {
            Ok((tr, va, te)) => {
                prop_assert!(spec.total() as i64 <= span);
                let (_, tr_hi) = tr.period_range().unwrap();
                let (te_lo, _) = te.period_range().unwrap();
                prop_assert!(tr_hi < te_lo);
                if let Some((va_lo, va_hi)) = va.period_range() {
                    prop_assert!(tr_hi < va_lo && va_hi < te_lo);
                }
                prop_assert_eq!(tr.records().len() + va.records().len() + te.records().len(), 2 * spec.total());
            }
            Err(e) => {
                prop_assert!(spec.total() as i64 > span);
                prop_assert!(matches!(e, Error::SpanTooShort(_)));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// CSV and preprocessing
// ---------------------------------------------------------------------------

fn arb_value(categorical: bool) -> BoxedStrategy<FeatureValue> {
    if categorical {
        prop_oneof![3 => "[a-z][a-z0-9 ,\"]{0,6}".prop_map(FeatureValue::Cat), 1 => Just(FeatureValue::Missing)].boxed()
    } else {
        prop_oneof![3 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(FeatureValue::Num), 1 => Just(FeatureValue::Missing)]
            .boxed()
    }
}

fn arb_record() -> impl Strategy<Value = SubscriptionRecord> {
    (
        0usize..3,
        -5i64..30,
        1e-6f64..1e6,
        0u64..100_000,
        0.0f64..1e4,
        0.0f64..1.0,
        0.0f64..100.0,
        arb_value(false),
        arb_value(true),
    )
        .prop_map(
            |(s, period, price, quantity, cost, churn_share, tenure, usage, plan)| {
                SubscriptionRecord {
                    segment_id: format!("seg,{s}"),
                    period,
                    price,
                    quantity,
                    unit_cost: cost,
                    churned: (quantity as f64 * churn_share) as u64,
                    tenure,
                    covariates: BTreeMap::from([
                        ("usage".to_string(), usage),
                        ("plan".to_string(), plan),
                    ]),
                }
            },
        )
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(records in proptest::collection::vec(arb_record(), 1..40)) {
        let mut seen = std::collections::BTreeSet::new();
        let records: Vec<_> = records.into_iter().filter(|r| seen.insert((r.segment_id.clone(), r.period))).collect();
        let panel = build_panel(records, schema()).unwrap();
        let mut buf = Vec::new();
        write_csv(&panel, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), schema()).unwrap();
        prop_assert_eq!(back, panel);
    }

    #[test]
    fn stored_parameters_apply_idempotently(usage in proptest::collection::vec(proptest::option::of(-50.0f64..50.0), 6..30)) {
        let records: Vec<_> = usage
            .iter()
            .enumerate()
            .map(|(t, u)| {
                let usage = u.map_or(FeatureValue::Missing, FeatureValue::Num);
                let plan = FeatureValue::Cat(if t % 3 == 0 { "basic" } else { "pro" }.into());
                record(if t % 2 == 0 { "a" } else { "b" }, t as i64, usage, plan)
            })
            .collect();
        let panel = build_panel(records, schema()).unwrap();
        match preprocess(&panel, &PrepConfig::default(), None) {
            Ok((once, params)) => {
                prop_assert_eq!(&params.apply(&panel).unwrap(), &once);
                prop_assert_eq!(params.apply(&once).unwrap(), once);
            }
            // Only an all-missing numeric column may fail.
            Err(_) => prop_assert!(usage.iter().all(Option::is_none)),
        }
    }
}
