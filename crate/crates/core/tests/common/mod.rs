//! Shared fixtures for integration tests.
#![allow(dead_code)]

use rand::Rng;
use subprice::optimizer::{FairnessPair, PricingProblem, SegmentProblem};
use subprice::rng::stream;

/// A random 1-3 segment pricing problem whose guardrails may bind.
pub fn random_problem(seed: u64, index: u64, max_segments: usize) -> PricingProblem {
    let mut rng = stream(seed, "random-problem", index);
    let n = rng.random_range(1..=max_segments);
    let margin_min = rng.random_range(0.0..4.0);
    let segments: Vec<SegmentProblem> = (0..n)
        .map(|s| {
            let cost = rng.random_range(5.0..20.0);
            let mut seg = SegmentProblem {
                id: format!("s{s}"),
                tier: None,
                log_scale: rng.random_range(6.0..10.0),
                beta: rng.random_range(-3.5..-1.2),
                unit_cost: cost,
                churn_intercept: rng.random_range(-5.0..-2.0),
                churn_slope: rng.random_range(0.0..0.08),
                churn_max: 1.0,
                volume_min: 0.0,
                price_lo: cost * rng.random_range(0.8..1.2),
                price_hi: cost * rng.random_range(3.0..6.0),
            };
            let pick = |rng: &mut subprice::rng::StreamRng, seg: &SegmentProblem| {
                let lo = (seg.unit_cost + margin_min).max(seg.price_lo);
                lo + rng.random::<f64>() * (seg.price_hi - lo)
            };
            if rng.random_bool(0.5) {
                let p = pick(&mut rng, &seg);
                seg.churn_max = seg.churn(p);
            }
            if rng.random_bool(0.3) {
                let p = pick(&mut rng, &seg);
                seg.volume_min = seg.demand(p);
            }
            seg
        })
        .collect();
    let mut fairness = Vec::new();
    if n >= 2 && rng.random_bool(0.6) {
        fairness.push(FairnessPair {
            i: "s0".into(),
            j: "s1".into(),
            delta: rng.random_range(0.9..1.3),
        });
    }
    if n == 3 && rng.random_bool(0.5) {
        fairness.push(FairnessPair {
            i: "s2".into(),
            j: "s0".into(),
            delta: rng.random_range(1.0..1.5),
        });
    }
    PricingProblem::new(segments, margin_min, fairness).expect("generated problem is valid")
}

pub fn grid_points(n: usize) -> usize {
    match n {
        1 => 4001,
        2 => 301,
        _ => 61,
    }
}

/// Population, ground truth and models fitted on its history.
pub fn fitted_population(
    n_segments: usize,
    seed: u64,
) -> (
    subprice::panel::SubscriptionPanel,
    subprice::synthgen::GroundTruth,
    subprice::backtest::FittedModels,
) {
    use subprice::backtest::{fit_models, CompareConfig};
    use subprice::elasticity::ElasticityConfig;
    use subprice::synthgen::{generate_population, GenConfig};

    let (panel, truth) = generate_population(&GenConfig {
        n_segments,
        seed,
        ..Default::default()
    })
    .unwrap();
    let cfg = CompareConfig {
        elasticity: ElasticityConfig {
            n_draws: 600,
            n_burnin: 200,
            ..Default::default()
        },
        seed,
        ..Default::default()
    };
    let models = fit_models(&panel, &cfg).unwrap();
    (panel, truth, models)
}

/// Series `1..=n` of a trend-plus-seasonal level with Gaussian noise.
pub fn noisy_seasonal(seed: u64, index: u64, n: usize, sigma: f64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let mut rng = stream(seed, "noisy-seasonal", index);
    let level = rng.random_range(80.0..400.0);
    let slope = rng.random_range(-0.3..0.6);
    let amp = rng.random_range(0.0..0.1) * level;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let noise = Normal::new(0.0, sigma).unwrap();
    (1..=n)
        .map(|t| {
            let w = std::f64::consts::TAU * t as f64 / 12.0 + phase;
            level + slope * t as f64 + amp * w.sin() + noise.sample(&mut rng)
        })
        .collect()
}

/// A segment series with the given quantities and optional covariate rows.
pub fn series(values: &[f64], covariates: Option<&[Vec<f64>]>) -> subprice::panel::SegmentSeries {
    use subprice::panel::{SegmentSeries, SeriesPoint};
    let width = covariates.map_or(0, |c| c[0].len());
    SegmentSeries {
        segment: "s".into(),
        covariate_names: (0..width).map(|i| format!("x{i}")).collect(),
        points: values
            .iter()
            .enumerate()
            .map(|(i, &q)| SeriesPoint {
                period: i as i64 + 1,
                price: 10.0,
                quantity: q,
                unit_cost: 4.0,
                tenure: 0.0,
                covariates: covariates.map_or(vec![], |c| c[i].clone()),
                churn_rate: 0.0,
            })
            .collect(),
    }
}
