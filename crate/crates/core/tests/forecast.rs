mod common;

use common::{noisy_seasonal, series};
use proptest::prelude::*;
use subprice::forecast::gbdt::{best_split, Node};
use subprice::forecast::metrics::{interval_coverage, mape, rmse};
use subprice::forecast::{
    evaluate_forecast, fit_demand_model, predict_with_intervals, ForecastConfig, Gbdt, GbdtConfig,
};
use subprice::Error;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

#[test]
fn hand_computed_accuracy() {
    let (f, a) = ([110.0_f64, 180.0], [100.0_f64, 200.0]);
    assert!((mape(&f, &a).unwrap() - 10.0).abs() < 1e-12);
    assert!((rmse(&f, &a).unwrap() - 250f64.sqrt()).abs() < 1e-12);
    let m = evaluate_forecast(&f, &[90.0, 170.0], &[120.0, 190.0], &a).unwrap();
    assert_eq!(m.icp, 0.5);
    assert!(matches!(mape(&[1.0], &[0.0]), Err(Error::ZeroActual(0))));
    assert!(matches!(
        rmse(&[1.0, 2.0], &[1.0]),
        Err(Error::LengthMismatch(_))
    ));
}

#[test]
fn intervals_covering_everything_score_one() {
    let a = [3.0, 5.0, 8.0];
    assert_eq!(interval_coverage(&[0.0; 3], &[10.0; 3], &a).unwrap(), 1.0);
    let m = evaluate_forecast(&a, &a, &a, &a).unwrap();
    assert_eq!((m.mape, m.rmse, m.icp), (0.0, 0.0, 1.0));
}

// ---------------------------------------------------------------------------
// Boosted trees
// ---------------------------------------------------------------------------

fn brute_force_stump_sse(x: &[Vec<f64>], y: &[f64]) -> f64 {
    let sse = |ix: &[usize]| {
        if ix.is_empty() {
            return 0.0;
        }
        let m = ix.iter().map(|&i| y[i]).sum::<f64>() / ix.len() as f64;
        ix.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let all: Vec<usize> = (0..y.len()).collect();
    let mut best = sse(&all);
    for f in 0..x[0].len() {
        for row in x {
            let t = row[f];
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| x[i][f] <= t);
            if !l.is_empty() && !r.is_empty() {
                best = best.min(sse(&l) + sse(&r));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stump_matches_brute_force_split(
        rows in proptest::collection::vec((proptest::collection::vec(-5i32..5, 2), -10.0f64..10.0), 2..14)
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r.iter().map(|&v| v as f64).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|(_, t)| *t).collect();
        let cfg = GbdtConfig { n_trees: 1, max_depth: 1, learning_rate: 1.0, min_leaf: 1, subsample: 1.0 };
        let model = Gbdt::fit(&x, &y, &cfg, 0).unwrap();
        let fitted: f64 = x.iter().zip(&y).map(|(r, t)| (t - model.predict(r)).powi(2)).sum();
        let oracle = brute_force_stump_sse(&x, &y);
        prop_assert!((fitted - oracle).abs() <= 1e-9 * (1.0 + oracle), "{fitted} vs {oracle}");
        if let Node::Split { feature, threshold, .. } = &model.trees[0] {
            let idx: Vec<usize> = (0..y.len()).collect();
            let r: Vec<f64> = y.iter().map(|v| v - model.base).collect();
            let s = best_split(&x, &r, &idx, 1).unwrap();
            prop_assert_eq!((*feature, *threshold), (s.feature, s.threshold));
        }
    }

    #[test]
    fn training_loss_never_rises(seed in 0u64..1000, depth in 1usize..4, lr in 0.05f64..1.0) {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, ((i * 13 + seed as usize) % 11) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| (r[0] * 1.3).sin() * 4.0 + r[1] * 0.2).collect();
        let cfg = GbdtConfig { n_trees: 30, max_depth: depth, learning_rate: lr, min_leaf: 2, subsample: 1.0 };
        let m = Gbdt::fit(&x, &y, &cfg, seed).unwrap();
        prop_assert_eq!(m.train_loss.len(), 31);
        for w in m.train_loss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", w);
        }
    }
}

#[test]
fn bad_tree_configs_are_rejected() {
    for cfg in [
        GbdtConfig {
            n_trees: 0,
            ..Default::default()
        },
        GbdtConfig {
            learning_rate: 1.5,
            ..Default::default()
        },
        GbdtConfig {
            subsample: 0.0,
            ..Default::default()
        },
        GbdtConfig {
            min_leaf: 0,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            Gbdt::fit(&[vec![1.0]], &[1.0], &cfg, 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}

// ---------------------------------------------------------------------------
// Decomposition and intervals
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_reconstructs_training_data(seed in 0u64..10_000, n in 24usize..60, with_cov in any::<bool>()) {
        let values = noisy_seasonal(seed, 0, n, 5.0);
        let covs: Vec<Vec<f64>> = (0..n).map(|i| vec![((i * 7 + seed as usize) % 5) as f64]).collect();
        let s = series(&values, with_cov.then_some(covs.as_slice()));
        let m = fit_demand_model(&s, &ForecastConfig::default()).unwrap();
        prop_assert!(m.decomposition.reconstruction_error() < 1e-9);
    }
}

#[test]
fn intervals_widen_with_level() {
    let values = noisy_seasonal(3, 0, 48, 8.0);
    let m = fit_demand_model(&series(&values, None), &ForecastConfig::default()).unwrap();
    let mut prev: Option<Vec<f64>> = None;
    for level in [0.5, 0.8, 0.9, 0.95, 0.99] {
        let fc = predict_with_intervals(&m, 6, &[], 500, level, 11).unwrap();
        let width: Vec<f64> = fc.lower.iter().zip(&fc.upper).map(|(l, u)| u - l).collect();
        if let Some(p) = &prev {
            assert!(width.iter().zip(p).all(|(w, q)| w >= q), "level {level}");
        }
        for h in 0..6 {
            assert!(fc.lower[h] <= fc.mean[h] && fc.mean[h] <= fc.upper[h]);
        }
        prev = Some(width);
    }
}

#[test]
fn exactly_fitted_series_has_zero_width_intervals() {
    let f = |t: usize| 120.0 + 9.0 * (std::f64::consts::TAU * t as f64 / 12.0).cos();
    let values: Vec<f64> = (1..=36).map(f).collect();
    let m = fit_demand_model(&series(&values, None), &ForecastConfig::default()).unwrap();
    let fc = predict_with_intervals(&m, 4, &[], 300, 0.9, 2).unwrap();
    for h in 0..4 {
        assert!((fc.upper[h] - fc.lower[h]).abs() < 1e-6, "{fc:?}");
        assert!((fc.mean[h] - f(37 + h)).abs() < 1e-6);
    }
}

#[test]
fn intervals_are_seeded_and_validated() {
    let values = noisy_seasonal(5, 0, 36, 4.0);
    let m = fit_demand_model(&series(&values, None), &ForecastConfig::default()).unwrap();
    let a = predict_with_intervals(&m, 3, &[], 200, 0.9, 1).unwrap();
    assert_eq!(a, predict_with_intervals(&m, 3, &[], 200, 0.9, 1).unwrap());
    assert_ne!(a, predict_with_intervals(&m, 3, &[], 200, 0.9, 2).unwrap());
    assert!(predict_with_intervals(&m, 3, &[], 0, 0.9, 1).is_err());
    assert!(predict_with_intervals(&m, 3, &[], 10, 1.0, 1).is_err());
    assert!(matches!(
        fit_demand_model(&series(&values[..20], None), &ForecastConfig::default()),
        Err(Error::SeriesTooShort {
            needed: 24,
            got: 20
        })
    ));
}

#[test]
fn ninety_percent_intervals_cover_gaussian_noise() {
    let (n_series, n, h) = (60, 60, 6);
    let (mut hits, mut total) = (0usize, 0usize);
    for i in 0..n_series {
        let values = noisy_seasonal(17, i, n + h, 6.0);
        let m = fit_demand_model(&series(&values[..n], None), &ForecastConfig::default()).unwrap();
        let fc = predict_with_intervals(&m, h, &[], 400, 0.9, i).unwrap();
        for (k, actual) in values[n..].iter().enumerate() {
            hits += usize::from(fc.lower[k] <= *actual && *actual <= fc.upper[k]);
            total += 1;
        }
    }
    let icp = hits as f64 / total as f64;
    assert!((icp - 0.90).abs() <= 0.03, "coverage {icp}");
}
