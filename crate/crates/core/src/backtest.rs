//! Rolling-origin forecast evaluation and pricing strategy comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::churn::{build_churn_labels, fit_churn, predict_churn, ChurnFitConfig, ChurnModel};
use crate::elasticity::{
    fit_hierarchical, summarize_all, ElasticityConfig, ElasticityEstimate, ElasticityPriors,
};
use crate::error::{Error, Result};
use crate::forecast::metrics::evaluate_forecast;
use crate::forecast::{fit_demand_model, predict_with_intervals, ForecastConfig, ForecastMetrics};
use crate::optimizer::{
    build_problem, contexts_from_panel, GuardrailConfig, PriceBounds, PricingProblem,
    PricingSolution, SegmentContext, SolverConfig,
};
use crate::panel::{aggregate_segment, SegmentSeries, SplitSpec, SubscriptionPanel};
use crate::risk::{FixedPolicy, OptimizedPolicy, PricingPolicy, UniformUplift};
use crate::rng::derive_seed;
use crate::synthgen::{simulate_market, GroundTruth, PriceSchedule, RealizedOutcomes};

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestProtocol {
    pub split: SplitSpec,
    /// Periods forecast at each refit point.
    pub horizon: usize,
    pub refit_every: usize,
}

impl Default for BacktestProtocol {
    fn default() -> Self {
        BacktestProtocol {
            split: SplitSpec::default(),
            horizon: 1,
            refit_every: 1,
        }
    }
}

impl BacktestProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.refit_every == 0 {
            return Err(Error::config("horizon and refit_every must be positive"));
        }
        if self.horizon > self.split.test_periods {
            return Err(Error::SpanTooShort(format!(
                "horizon {} exceeds the {}-period test span",
                self.horizon, self.split.test_periods
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Rolling-origin forecasting
// ---------------------------------------------------------------------------

/// Point forecast with interval bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalForecast {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A model that forecasts demand from a segment's history.
pub trait Forecaster: Sync {
    /// Forecast for `periods`, which immediately follow `history`.
    /// `future_covariates` has one row per target period.
    fn forecast(
        &self,
        history: &SegmentSeries,
        periods: &[i64],
        future_covariates: &[Vec<f64>],
        seed: u64,
    ) -> Result<IntervalForecast>;
}

/// The seasonal-trend-plus-boosting demand model with bootstrap intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemandForecaster {
    pub config: ForecastConfig,
    pub n_draws: usize,
    pub level: f64,
}

impl Default for DemandForecaster {
    fn default() -> Self {
        DemandForecaster {
            config: ForecastConfig::default(),
            n_draws: 500,
            level: 0.9,
        }
    }
}

impl Forecaster for DemandForecaster {
    fn forecast(
        &self,
        history: &SegmentSeries,
        periods: &[i64],
        future: &[Vec<f64>],
        seed: u64,
    ) -> Result<IntervalForecast> {
        let cfg = ForecastConfig {
            seed,
            ..self.config.clone()
        };
        let model = fit_demand_model(history, &cfg)?;
        let fc = predict_with_intervals(
            &model,
            periods.len(),
            future,
            self.n_draws,
            self.level,
            seed,
        )?;
        Ok(IntervalForecast {
            mean: fc.mean,
            lower: fc.lower,
            upper: fc.upper,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    /// First forecast period of the window.
    pub origin: i64,
    pub periods: Vec<i64>,
    pub per_segment: BTreeMap<String, ForecastMetrics>,
    pub metrics: ForecastMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub protocol: BacktestProtocol,
    pub windows: Vec<WindowResult>,
    pub aggregate: ForecastMetrics,
}

/// Rolling-origin evaluation over the test span of `protocol.split`.
///
/// At each refit point the forecaster sees only periods before the origin.
/// Covariates for the forecast periods are unknown at the origin, so the
/// last observed row is carried forward.
pub fn run_backtest(
    panel: &SubscriptionPanel,
    protocol: &BacktestProtocol,
    forecaster: &dyn Forecaster,
    seed: u64,
) -> Result<BacktestReport> {
    protocol.validate()?;
    protocol.split.check(panel.period_span())?;
    let (lo, _) = panel.period_range().expect("non-empty after span check");
    let test_start = lo + (protocol.split.train_periods + protocol.split.val_periods) as i64;
    let test_end = test_start + protocol.split.test_periods as i64 - 1;
    let h = protocol.horizon as i64;

    let mut windows = Vec::new();
    let (mut all_mean, mut all_lo, mut all_hi, mut all_act) = (vec![], vec![], vec![], vec![]);
    let mut origin = test_start;
    let mut w = 0u64;
    while origin + h - 1 <= test_end {
        let history_panel = panel.filter_periods(lo, origin - 1);
        let target_panel = panel.filter_periods(origin, origin + h - 1);
        let periods: Vec<i64> = (origin..origin + h).collect();
        let (mut wm, mut wl, mut wh, mut wa) = (vec![], vec![], vec![], vec![]);
        let mut per_segment = BTreeMap::new();
        for (k, seg) in history_panel.segments().iter().enumerate() {
            let history = aggregate_segment(&history_panel, seg, None)?;
            let actual_series = aggregate_segment(&target_panel, seg, None)?;
            if actual_series
                .points
                .iter()
                .map(|p| p.period)
                .collect::<Vec<_>>()
                != periods
            {
                return Err(Error::SpanTooShort(format!(
                    "segment `{seg}` lacks actuals for the window at {origin}"
                )));
            }
            let carried = history
                .points
                .last()
                .map(|p| p.covariates.clone())
                .unwrap_or_default();
            let future = if carried.is_empty() {
                vec![]
            } else {
                vec![carried; periods.len()]
            };
            let fc = forecaster.forecast(
                &history,
                &periods,
                &future,
                derive_seed(seed, "backtest-window", w * 100_000 + k as u64),
            )?;
            let actual = actual_series.quantities();
            per_segment.insert(
                seg.clone(),
                evaluate_forecast(&fc.mean, &fc.lower, &fc.upper, &actual)?,
            );
            wm.extend(fc.mean);
            wl.extend(fc.lower);
            wh.extend(fc.upper);
            wa.extend(actual);
        }
        windows.push(WindowResult {
            origin,
            periods,
            per_segment,
            metrics: evaluate_forecast(&wm, &wl, &wh, &wa)?,
        });
        all_mean.extend(wm);
        all_lo.extend(wl);
        all_hi.extend(wh);
        all_act.extend(wa);
        origin += protocol.refit_every as i64;
        w += 1;
    }
    Ok(BacktestReport {
        protocol: protocol.clone(),
        aggregate: evaluate_forecast(&all_mean, &all_lo, &all_hi, &all_act)?,
        windows,
    })
}

// ---------------------------------------------------------------------------
// Customer lifetime value
// ---------------------------------------------------------------------------

/// Discounted margin per customer under geometric retention.
pub fn clv(price: f64, cost: f64, churn_rate: f64, discount_rate: f64) -> Result<f64> {
    if !(churn_rate > 0.0 && churn_rate <= 1.0) {
        return Err(Error::config(format!(
            "churn rate {churn_rate} outside (0, 1]"
        )));
    }
    if !(discount_rate >= 0.0) {
        return Err(Error::config("discount rate must be >= 0"));
    }
    Ok((price - cost) * (1.0 - churn_rate) / (discount_rate + churn_rate))
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    StaticTiered,
    UniformUplift,
    Elasticity,
    Guardrailed,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::StaticTiered => "static_tiered",
            StrategyKind::UniformUplift => "uniform_uplift",
            StrategyKind::Elasticity => "elasticity",
            StrategyKind::Guardrailed => "guardrailed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    /// Fixed uplift for `uniform_uplift`; grid-searched on validation when absent.
    #[serde(default)]
    pub uplift_pct: Option<f64>,
    /// Guardrails for the optimized strategies; status-quo guardrails when absent.
    #[serde(default)]
    pub guardrails: Option<GuardrailConfig>,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        StrategySpec {
            kind,
            uplift_pct: None,
            guardrails: None,
        }
    }

    /// The four standard strategies.
    pub fn standard() -> Vec<StrategySpec> {
        [
            StrategyKind::StaticTiered,
            StrategyKind::UniformUplift,
            StrategyKind::Elasticity,
            StrategyKind::Guardrailed,
        ]
        .into_iter()
        .map(StrategySpec::new)
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    /// Candidate uplifts, as fractions, for the uniform strategy.
    pub uplift_grid: Vec<f64>,
    pub elasticity: ElasticityConfig,
    pub priors: ElasticityPriors,
    pub churn_fit: ChurnFitConfig,
    pub churn_window: usize,
    /// Relative rise in predicted churn allowed by the default guardrails.
    pub churn_headroom: f64,
    pub solver: SolverConfig,
    /// Per-period discount rate for CLV.
    pub discount_rate: f64,
    /// Simulated paths averaged per strategy.
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            uplift_grid: (0..=12).map(|k| -0.10 + 0.05 * k as f64).collect(),
            elasticity: ElasticityConfig {
                n_draws: 1500,
                n_burnin: 500,
                ..Default::default()
            },
            priors: ElasticityPriors::default(),
            churn_fit: ChurnFitConfig::default(),
            churn_window: 1,
            churn_headroom: 0.10,
            solver: SolverConfig::default(),
            discount_rate: 0.01,
            n_paths: 20,
            seed: 0,
        }
    }
}

/// Demand and churn models fitted on a history panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub estimates: Vec<ElasticityEstimate>,
    pub churn: ChurnModel,
    pub contexts: Vec<SegmentContext>,
}

pub fn fit_models(history: &SubscriptionPanel, cfg: &CompareConfig) -> Result<FittedModels> {
    let post = fit_hierarchical(
        history,
        &cfg.priors,
        &ElasticityConfig {
            seed: cfg.seed,
            ..cfg.elasticity.clone()
        },
    )?;
    let data = build_churn_labels(history, cfg.churn_window, None)?;
    let churn = fit_churn(&data, &cfg.churn_fit)?.model;
    let contexts = contexts_from_panel(history, &churn);
    Ok(FittedModels {
        estimates: summarize_all(&post),
        churn,
        contexts,
    })
}

/// Guardrails that let every segment's predicted churn rise by at most the
/// relative `churn_headroom` over its level at the current price, inside a
/// 0.7x to 1.5x price band.
pub fn status_quo_guardrails(
    models: &FittedModels,
    churn_headroom: f64,
) -> Result<GuardrailConfig> {
    let mut churn_max = BTreeMap::new();
    for ctx in &models.contexts {
        let features = ctx.churn_features.as_deref().ok_or_else(|| {
            Error::MissingEstimate(format!("no churn features for segment `{}`", ctx.segment))
        })?;
        let now = predict_churn(
            &models.churn,
            ctx.current_price,
            ctx.current_price,
            features,
            ctx.tenure,
        )?;
        churn_max.insert(
            ctx.segment.clone(),
            (now * (1.0 + churn_headroom)).clamp(1e-6, 1.0),
        );
    }
    Ok(GuardrailConfig {
        churn_max,
        relative_price_bounds: Some(PriceBounds { lo: 0.7, hi: 1.5 }),
        ..Default::default()
    })
}

/// A churn model that predicts no churn at any price.
fn churn_blind(model: &ChurnModel) -> ChurnModel {
    ChurnModel {
        theta0: -50.0,
        theta1: 0.0,
        theta2: 0.0,
        theta3: model.theta3.iter().map(|(n, _)| (n.clone(), 0.0)).collect(),
        theta4: 0.0,
        l1_lambda: model.l1_lambda,
    }
}

/// A strategy turned into a runnable policy.
pub struct PreparedStrategy {
    pub name: String,
    pub kind: StrategyKind,
    pub uplift_pct: Option<f64>,
    pub policy: Box<dyn PricingPolicy>,
    /// Problem and solution at the current market, for optimized strategies.
    pub problem: Option<PricingProblem>,
    pub solution: Option<PricingSolution>,
}

fn current_prices(truth: &GroundTruth) -> PriceSchedule {
    PriceSchedule::constant(
        truth
            .segments
            .iter()
            .map(|s| (s.segment_id.clone(), s.last_price)),
    )
}

/// Uplift with the highest mean profit over the validation span, ties to
/// the smaller uplift.
pub fn best_uniform_uplift(
    truth: &GroundTruth,
    grid: &[f64],
    periods: usize,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &u in grid {
        let policy = UniformUplift::new(u);
        let schedule = policy.schedule(truth, periods)?;
        let mut profit = 0.0;
        for path in 0..n_paths.max(1) {
            profit += simulate_market(
                truth,
                &schedule,
                periods,
                derive_seed(seed, "uplift-validation", path as u64),
            )?
            .total_profit();
        }
        if best.is_none_or(|(_, p)| profit > p) {
            best = Some((u, profit));
        }
    }
    best.map(|(u, _)| u)
        .ok_or_else(|| Error::EmptyInput("uplift grid".into()))
}

/// Builds runnable policies, fitting models on `history` when needed.
pub fn prepare_strategies(
    truth: &GroundTruth,
    history: &SubscriptionPanel,
    strategies: &[StrategySpec],
    protocol: &BacktestProtocol,
    cfg: &CompareConfig,
) -> Result<(Vec<PreparedStrategy>, Option<FittedModels>)> {
    let needs_models = strategies
        .iter()
        .any(|s| matches!(s.kind, StrategyKind::Elasticity | StrategyKind::Guardrailed));
    let models = if needs_models {
        Some(fit_models(history, cfg)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(strategies.len());
    for spec in strategies {
        let name = spec.kind.as_str().to_string();
        let prepared = match spec.kind {
            StrategyKind::StaticTiered => PreparedStrategy {
                name: name.clone(),
                kind: spec.kind,
                uplift_pct: None,
                policy: Box::new(FixedPolicy {
                    name,
                    schedule: current_prices(truth),
                }),
                problem: None,
                solution: None,
            },
            StrategyKind::UniformUplift => {
                let u = match spec.uplift_pct {
                    Some(u) if u > -1.0 => u,
                    Some(u) => return Err(Error::config(format!("uplift {u} must exceed -1"))),
                    None => best_uniform_uplift(
                        truth,
                        &cfg.uplift_grid,
                        protocol.split.val_periods.max(1),
                        cfg.n_paths,
                        derive_seed(cfg.seed, "uplift-search", 0),
                    )?,
                };
                PreparedStrategy {
                    name: name.clone(),
                    kind: spec.kind,
                    uplift_pct: Some(u),
                    policy: Box::new(UniformUplift { name, uplift: u }),
                    problem: None,
                    solution: None,
                }
            }
            StrategyKind::Elasticity | StrategyKind::Guardrailed => {
                let m = models
                    .as_ref()
                    .expect("models fitted for optimized strategies");
                let guardrailed = spec.kind == StrategyKind::Guardrailed;
                let mut guard = match &spec.guardrails {
                    Some(g) => g.clone(),
                    None => status_quo_guardrails(m, cfg.churn_headroom)?,
                };
                let churn = if guardrailed {
                    m.churn.clone()
                } else {
                    churn_blind(&m.churn)
                };
                if !guardrailed {
                    guard.churn_max.clear();
                    guard.default_churn_max = 1.0;
                }
                let problem = build_problem(&m.estimates, &churn, &m.contexts, &guard)?;
                let policy = OptimizedPolicy {
                    name: name.clone(),
                    problem: problem.clone(),
                    solver: cfg.solver.clone(),
                    observe_costs: true,
                };
                let solution = policy.prices(truth)?;
                PreparedStrategy {
                    name,
                    kind: spec.kind,
                    uplift_pct: None,
                    policy: Box::new(policy),
                    problem: Some(problem),
                    solution: Some(solution),
                }
            }
        };
        out.push(prepared);
    }
    Ok((out, models))
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub kind: StrategyKind,
    pub uplift_pct: Option<f64>,
    /// Means over simulated paths of horizon totals.
    pub revenue: f64,
    pub profit: f64,
    /// Cancellations over subscribers.
    pub churn_rate: f64,
    /// Subscriber-weighted mean CLV.
    pub clv: f64,
    pub revenue_lift_pct: f64,
    pub margin_impact_pct: f64,
    pub churn_rate_pct: f64,
    pub clv_change_pct: f64,
    /// Share of segment prices that satisfy every guardrail, when guardrails apply.
    pub compliance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub test_periods: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyResult>,
}

impl ComparisonReport {
    pub fn get(&self, kind: StrategyKind) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.kind == kind)
    }

    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>12} {:>12} {:>10} {:>10} {:>10}",
            "strategy", "revenue_%", "margin_%", "churn_%", "clv_%", "compliance"
        );
        for s in &self.strategies {
            let comp = s
                .compliance_rate
                .map_or_else(|| "-".to_string(), |c| format!("{:.3}", c));
            let _ = writeln!(
                out,
                "{:<16} {:>12.2} {:>12.2} {:>10.3} {:>10.2} {:>10}",
                s.strategy,
                s.revenue_lift_pct,
                s.margin_impact_pct,
                s.churn_rate_pct,
                s.clv_change_pct,
                comp
            );
        }
        if let Some(u) = self.strategies.iter().find_map(|s| s.uplift_pct) {
            let _ = writeln!(out, "uniform uplift chosen on validation: {u:+.1}%");
        }
        out
    }
}

/// Segment-level compliance of a price vector with the guardrails of `problem`.
pub fn compliance_rate(problem: &PricingProblem, prices: &BTreeMap<String, f64>, tol: f64) -> f64 {
    let vec: Vec<f64> = problem
        .segments
        .iter()
        .map(|s| prices.get(&s.id).copied().unwrap_or(f64::NAN))
        .collect();
    let report = problem.constraint_report(&vec, tol);
    let ok = problem
        .segments
        .iter()
        .filter(|s| {
            let tag = format!(":{}", s.id);
            let pair = |n: &str| {
                n.split_once(':')
                    .is_some_and(|(_, ids)| ids.split('/').any(|id| id == s.id))
            };
            report
                .iter()
                .filter(|c| {
                    c.name.ends_with(&tag) || (c.name.starts_with("fairness:") && pair(&c.name))
                })
                .all(|c| !c.violated(tol) && c.value.is_finite())
        })
        .count();
    ok as f64 / problem.len() as f64
}

fn summarize_paths(
    truth: &GroundTruth,
    schedule: &PriceSchedule,
    periods: usize,
    cfg: &CompareConfig,
) -> Result<(f64, f64, f64, f64)> {
    let (mut rev, mut profit, mut q, mut k, mut clv_num) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for path in 0..cfg.n_paths.max(1) {
        let out: RealizedOutcomes = simulate_market(
            truth,
            schedule,
            periods,
            derive_seed(cfg.seed, "strategy-test", path as u64),
        )?;
        rev += out.total_revenue();
        profit += out.total_profit();
        for s in &out.segments {
            let qs: u64 = s.quantity.iter().sum();
            let ks: u64 = s.churned.iter().sum();
            q += qs as f64;
            k += ks as f64;
            let price = s.prices.iter().sum::<f64>() / s.prices.len() as f64;
            let rate = s.churn_rate().max(1e-6);
            clv_num += qs as f64 * clv(price, s.unit_cost, rate, cfg.discount_rate)?;
        }
    }
    let n = cfg.n_paths.max(1) as f64;
    Ok((
        rev / n,
        profit / n,
        if q > 0.0 { k / q } else { 0.0 },
        if q > 0.0 { clv_num / q } else { 0.0 },
    ))
}

/// Plays every strategy against `truth` over the test span.
///
/// Models are fitted on `history`, the data observed before the test span.
/// All strategies share simulation seeds, and lifts are relative to
/// `static_tiered`.
pub fn compare_strategies(
    truth: &GroundTruth,
    history: &SubscriptionPanel,
    strategies: &[StrategySpec],
    protocol: &BacktestProtocol,
    cfg: &CompareConfig,
) -> Result<ComparisonReport> {
    if !strategies
        .iter()
        .any(|s| s.kind == StrategyKind::StaticTiered)
    {
        return Err(Error::NoBaseline);
    }
    protocol.validate()?;
    let periods = protocol.split.test_periods;
    let (prepared, _) = prepare_strategies(truth, history, strategies, protocol, cfg)?;
    let guard_problem = prepared
        .iter()
        .find(|p| p.kind == StrategyKind::Guardrailed)
        .and_then(|p| p.problem.as_ref());

    let mut rows = Vec::with_capacity(prepared.len());
    for p in &prepared {
        let schedule = p.policy.schedule(truth, periods)?;
        let (revenue, profit, churn_rate, clv_v) = summarize_paths(truth, &schedule, periods, cfg)?;
        let prices: BTreeMap<String, f64> = schedule
            .prices
            .iter()
            .map(|(k, v)| (k.clone(), v[0]))
            .collect();
        let compliance_rate =
            guard_problem.map(|gp| compliance_rate(gp, &prices, cfg.solver.constraint_tol));
        rows.push(StrategyResult {
            strategy: p.name.clone(),
            kind: p.kind,
            uplift_pct: p.uplift_pct.map(|u| 100.0 * u),
            revenue,
            profit,
            churn_rate,
            clv: clv_v,
            revenue_lift_pct: 0.0,
            margin_impact_pct: 0.0,
            churn_rate_pct: 100.0 * churn_rate,
            clv_change_pct: 0.0,
            compliance_rate,
        });
    }
    let base = rows
        .iter()
        .find(|r| r.kind == StrategyKind::StaticTiered)
        .cloned()
        .expect("baseline present");
    let lift = |x: f64, b: f64| if b == 0.0 { 0.0 } else { 100.0 * (x / b - 1.0) };
    for r in &mut rows {
        r.revenue_lift_pct = lift(r.revenue, base.revenue);
        r.margin_impact_pct = lift(r.profit, base.profit);
        r.clv_change_pct = lift(r.clv, base.clv);
    }
    Ok(ComparisonReport {
        test_periods: periods,
        n_paths: cfg.n_paths.max(1),
        seed: cfg.seed,
        strategies: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clv_hand_values() {
        assert!((clv(30.0, 10.0, 0.02, 0.0).unwrap() - 980.0).abs() < 1e-9);
        assert_eq!(clv(30.0, 10.0, 1.0, 0.05).unwrap(), 0.0);
        assert!(clv(30.0, 10.0, 0.0, 0.05).is_err());
        assert!(clv(30.0, 10.0, 0.05, 0.01).unwrap() < clv(30.0, 10.0, 0.04, 0.01).unwrap());
    }
}
