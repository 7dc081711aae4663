mod common;

use std::collections::BTreeMap;

use common::{grid_points, random_problem};
use subprice::error::Error;
use subprice::optimizer::{
    fallback, grid_oracle, solve, solve_decomposed, FairnessPair, PricingProblem, SegmentProblem,
    SolveStatus, SolverConfig,
};

fn seg(id: &str, beta: f64, cost: f64) -> SegmentProblem {
    SegmentProblem {
        id: id.into(),
        tier: None,
        log_scale: 9.0,
        beta,
        unit_cost: cost,
        churn_intercept: -40.0,
        churn_slope: 0.0,
        churn_max: 1.0,
        volume_min: 0.0,
        price_lo: 10.0,
        price_hi: 40.0,
    }
}

#[test]
fn matches_grid_oracle_on_random_problems() {
    let cfg = SolverConfig::default();
    let mut compared = 0;
    for k in 0..60 {
        let p = random_problem(11, k, 3);
        let sol = solve(&p, &cfg, None).unwrap();
        let grid = grid_oracle(&p, grid_points(p.len())).unwrap();
        if sol.status != SolveStatus::Fallback {
            assert_eq!(sol.violations(cfg.constraint_tol).count(), 0, "problem {k}");
        }
        if let Some(best) = grid.best {
            compared += 1;
            assert_ne!(
                sol.status,
                SolveStatus::Fallback,
                "problem {k}: grid found a feasible point"
            );
            assert!(
                sol.objective >= best.objective * (1.0 - 0.005),
                "problem {k}: solver {} < grid {}",
                sol.objective,
                best.objective
            );
        }
    }
    assert!(compared > 40);
}

#[test]
fn grid_oracle_finds_the_calculus_optimum() {
    let p = PricingProblem::new(vec![seg("a", -2.0, 10.0)], 0.0, vec![]).unwrap();
    let grid = grid_oracle(&p, 10_001).unwrap();
    let best = grid.best.unwrap();
    assert!((best.prices["a"] - 20.0).abs() <= grid.steps[0]);
    let sol = solve(&p, &SolverConfig::default(), None).unwrap();
    assert!((sol.objective - best.objective).abs() <= 1e-3 * best.objective);
}

#[test]
fn grid_oracle_rejects_four_segments() {
    let segs = (0..4).map(|i| seg(&format!("s{i}"), -2.0, 10.0)).collect();
    let p = PricingProblem::new(segs, 0.0, vec![]).unwrap();
    assert!(matches!(
        grid_oracle(&p, 11),
        Err(Error::TooManyDimensions(4))
    ));
}

#[test]
fn symmetric_fairness_equalizes_prices() {
    let pairs = vec![
        FairnessPair {
            i: "a".into(),
            j: "b".into(),
            delta: 1.0,
        },
        FairnessPair {
            i: "b".into(),
            j: "a".into(),
            delta: 1.0,
        },
    ];
    let p =
        PricingProblem::new(vec![seg("a", -2.0, 10.0), seg("b", -3.0, 10.0)], 0.0, pairs).unwrap();
    let sol = solve(&p, &SolverConfig::default(), None).unwrap();
    assert_ne!(sol.status, SolveStatus::Fallback);
    assert!((sol.prices["a"] / sol.prices["b"] - 1.0).abs() <= 1e-4);
}

#[test]
fn churn_cap_binds_when_the_free_optimum_exceeds_it() {
    let mut s = seg("a", -2.0, 10.0);
    s.churn_intercept = -3.0;
    s.churn_slope = 0.05;
    let free = solve(
        &PricingProblem::new(vec![s.clone()], 0.0, vec![]).unwrap(),
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    let cap = 0.9 * s.churn(free.prices["a"]);
    s.churn_max = cap;
    let sol = solve(
        &PricingProblem::new(vec![s.clone()], 0.0, vec![]).unwrap(),
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    assert!(s.churn(sol.prices["a"]) <= cap + 1e-4);
    let c = sol
        .constraints
        .iter()
        .find(|c| c.name == "churn_cap:a")
        .unwrap();
    assert!(c.binding);
}

#[test]
fn more_starts_never_lower_the_objective() {
    for k in 0..20 {
        let p = random_problem(5, k, 3);
        let few = solve(
            &p,
            &SolverConfig {
                n_starts: 3,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let many = solve(
            &p,
            &SolverConfig {
                n_starts: 10,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        if few.status != SolveStatus::Fallback {
            assert!(many.objective >= few.objective, "problem {k}");
        }
    }
}

#[test]
fn warm_start_from_an_optimum_is_cheap() {
    for k in 0..20 {
        let p = random_problem(8, k, 3);
        let cfg = SolverConfig::default();
        let cold = solve(&p, &cfg, None).unwrap();
        if cold.status != SolveStatus::Optimal {
            continue;
        }
        let warm = solve(&p, &cfg, Some(&cold.prices)).unwrap();
        let per_start =
            cold.metadata.start_iterations.iter().sum::<usize>() as f64 / cfg.n_starts as f64;
        let used = warm.metadata.warm_start_iterations.unwrap() as f64;
        assert!(
            used <= 0.1 * per_start.max(1.0),
            "problem {k}: warm {used} vs cold {per_start}"
        );
    }
}

#[test]
fn gradient_matches_central_differences() {
    for k in 0..30 {
        let p = random_problem(3, k, 3);
        let prices: Vec<f64> = p
            .segments
            .iter()
            .map(|s| 0.5 * (s.price_lo + s.price_hi))
            .collect();
        let g = p.gradient(&prices);
        for i in 0..p.len() {
            let h = 1e-5 * prices[i];
            let mut up = prices.clone();
            let mut dn = prices.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (p.objective(&up) - p.objective(&dn)) / (2.0 * h);
            assert!(
                (g[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "problem {k} dim {i}: {} vs {fd}",
                g[i]
            );
        }
    }
}

#[test]
fn fallback_applies_the_margin_rule() {
    let mut s = seg("a", -2.0, 10.0);
    s.price_lo = 12.0;
    let p = PricingProblem::new(vec![s.clone()], 5.0, vec![]).unwrap();
    let fb = fallback(&p);
    assert_eq!(fb.prices["a"], 15.0);
    assert_eq!(fb.status, SolveStatus::Fallback);
    assert_eq!(fb.violations(1e-4).count(), 0);

    s.price_hi = 14.0;
    s.price_lo = 12.0;
    let p = PricingProblem::new(vec![s], 3.0, vec![]).unwrap();
    assert_eq!(fallback(&p).prices["a"], 13.0);
}

#[test]
fn margin_floor_above_the_box_is_incoherent() {
    let r = PricingProblem::new(vec![seg("a", -2.0, 30.0)], 15.0, vec![]);
    assert!(matches!(r, Err(Error::IncoherentBounds { .. })));
}

#[test]
fn decomposition_matches_the_joint_solve() {
    let mut segs = Vec::new();
    for (i, tier) in ["basic", "basic", "pro", "pro"].iter().enumerate() {
        let mut s = seg(&format!("s{i}"), -1.5 - 0.3 * i as f64, 8.0 + i as f64);
        s.tier = Some(tier.to_string());
        s.churn_intercept = -3.0;
        s.churn_slope = 0.03;
        segs.push(s);
    }
    let pairs = vec![FairnessPair {
        i: "s0".into(),
        j: "s1".into(),
        delta: 1.05,
    }];
    let p = PricingProblem::new(segs, 1.0, pairs).unwrap();
    let cfg = SolverConfig::default();
    let joint = solve(&p, &cfg, None).unwrap();
    let split = solve_decomposed(&p, &cfg).unwrap();
    assert_eq!(split.metadata.decomposition.as_deref(), Some("per_tier"));
    assert!((split.objective - joint.objective).abs() <= 0.005 * joint.objective);

    let mut crossing = p.clone();
    crossing.fairness.push(FairnessPair {
        i: "s0".into(),
        j: "s3".into(),
        delta: 1.2,
    });
    let sol = solve_decomposed(&crossing, &cfg).unwrap();
    assert_eq!(sol.metadata.decomposition.as_deref(), Some("joint"));
}

#[test]
fn large_portfolios_solve_quickly() {
    let segs: Vec<_> = (0..500)
        .map(|i| {
            let mut s = seg(
                &format!("s{i:03}"),
                -1.3 - (i % 17) as f64 * 0.1,
                6.0 + (i % 11) as f64,
            );
            s.churn_intercept = -3.5;
            s.churn_slope = 0.02;
            s.price_hi = 80.0;
            s
        })
        .collect();
    let p = PricingProblem::new(segs, 1.0, vec![]).unwrap();
    let start = std::time::Instant::now();
    let sol = solve(&p, &SolverConfig::default(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn solution_json_is_reproducible() {
    let p = random_problem(2, 4, 3);
    let a = serde_json::to_string(&solve(&p, &SolverConfig::default(), None).unwrap()).unwrap();
    let b = serde_json::to_string(&solve(&p, &SolverConfig::default(), None).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in [
        "prices",
        "objective",
        "status",
        "constraints",
        "starts_used",
        "solve_ms",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let _: BTreeMap<String, f64> = serde_json::from_value(v["prices"].clone()).unwrap();
}
