//! Stress scenarios, Monte Carlo risk envelopes and early-warning alerts.
//!
//! The performance index of a (scenario, strategy) cell is the mean
//! simulated profit under the scenario divided by the mean profit of the same
//! strategy in the unstressed baseline, using common random numbers.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{solve, PricingProblem, SolveStatus, SolverConfig};
use crate::rng::derive_seed;
use crate::stats::{mean, quantile, std_dev};
use crate::synthgen::{
    apply_stress, simulate_market, GroundTruth, PriceSchedule, RealizedOutcomes,
};

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DemandDownturn,
    CompetitorCut,
    CostInflation,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::DemandDownturn,
        ScenarioKind::CompetitorCut,
        ScenarioKind::CostInflation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::DemandDownturn => "demand_downturn",
            ScenarioKind::CompetitorCut => "competitor_cut",
            ScenarioKind::CostInflation => "cost_inflation",
        }
    }

    /// Severity of the severe rung of the ladder.
    pub fn severe_severity(self) -> f64 {
        match self {
            ScenarioKind::DemandDownturn => 0.20,
            ScenarioKind::CompetitorCut => 0.15,
            ScenarioKind::CostInflation => 0.25,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownScenarioKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityLabel {
    Mild,
    Moderate,
    Severe,
}

impl SeverityLabel {
    pub const LADDER: [SeverityLabel; 3] = [
        SeverityLabel::Mild,
        SeverityLabel::Moderate,
        SeverityLabel::Severe,
    ];

    pub fn fraction(self) -> f64 {
        match self {
            SeverityLabel::Mild => 1.0 / 3.0,
            SeverityLabel::Moderate => 2.0 / 3.0,
            SeverityLabel::Severe => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLabel::Mild => "mild",
            SeverityLabel::Moderate => "moderate",
            SeverityLabel::Severe => "severe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub severity: f64,
    pub label: SeverityLabel,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, severity: f64, label: SeverityLabel) -> Result<Self> {
        let s = ScenarioSpec {
            kind,
            severity,
            label,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.severity) {
            return Err(Error::config(format!(
                "scenario severity {} outside [0, 1]",
                self.severity
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        format!("{}/{}", self.kind, self.label.as_str())
    }
}

/// Mild, moderate and severe rungs for each scenario kind, grouped by kind.
pub fn standard_scenarios() -> Vec<ScenarioSpec> {
    ScenarioKind::ALL
        .into_iter()
        .flat_map(|kind| {
            SeverityLabel::LADDER
                .into_iter()
                .map(move |label| ScenarioSpec {
                    kind,
                    severity: kind.severe_severity() * label.fraction(),
                    label,
                })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Something that sets prices for a market.
///
/// Policies receive the (possibly stressed) simulator state but should read
/// only what a firm observes: segment ids, current prices and unit costs.
pub trait PricingPolicy: Sync {
    fn name(&self) -> &str;
    fn schedule(&self, market: &GroundTruth, horizon: usize) -> Result<PriceSchedule>;
}

/// A precomputed schedule, insensitive to market conditions.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    pub name: String,
    pub schedule: PriceSchedule,
}

impl PricingPolicy for FixedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn schedule(&self, _: &GroundTruth, _: usize) -> Result<PriceSchedule> {
        Ok(self.schedule.clone())
    }
}

/// Every segment's current price scaled by `1 + uplift`.
#[derive(Debug, Clone)]
pub struct UniformUplift {
    pub name: String,
    pub uplift: f64,
}

impl UniformUplift {
    pub fn new(uplift: f64) -> Self {
        UniformUplift {
            name: "uniform_uplift".into(),
            uplift,
        }
    }
}

impl PricingPolicy for UniformUplift {
    fn name(&self) -> &str {
        &self.name
    }

    fn schedule(&self, market: &GroundTruth, _: usize) -> Result<PriceSchedule> {
        Ok(PriceSchedule::constant(market.segments.iter().map(|s| {
            (s.segment_id.clone(), s.last_price * (1.0 + self.uplift))
        })))
    }
}

/// Solves a fitted pricing problem, re-solving with the market's current
/// unit costs when `observe_costs` is set.
#[derive(Debug, Clone)]
pub struct OptimizedPolicy {
    pub name: String,
    pub problem: PricingProblem,
    pub solver: SolverConfig,
    pub observe_costs: bool,
}

impl OptimizedPolicy {
    pub fn prices(&self, market: &GroundTruth) -> Result<crate::optimizer::PricingSolution> {
        let mut problem = self.problem.clone();
        if self.observe_costs {
            for seg in &mut problem.segments {
                let i = market.segment_index(&seg.id)?;
                seg.unit_cost = market.segments[i].unit_cost;
                // Keep the problem coherent if costs outgrow the price box.
                seg.price_hi = seg.price_hi.max(seg.unit_cost + problem.margin_min);
            }
        }
        solve(&problem, &self.solver, None)
    }
}

impl PricingPolicy for OptimizedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn schedule(&self, market: &GroundTruth, _: usize) -> Result<PriceSchedule> {
        let sol = self.prices(market)?;
        let mut prices = sol.prices;
        // Segments outside the problem keep their current price.
        for s in &market.segments {
            prices.entry(s.segment_id.clone()).or_insert(s.last_price);
        }
        Ok(PriceSchedule::constant(prices))
    }
}

/// Whether a solution came from the optimizer proper.
pub fn is_optimized(status: SolveStatus) -> bool {
    status != SolveStatus::Fallback
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    pub mean: f64,
    pub sd: f64,
    pub p5: f64,
    pub p95: f64,
}

impl DistSummary {
    pub fn of(xs: &[f64]) -> Self {
        DistSummary {
            mean: mean(xs),
            sd: std_dev(xs),
            p5: quantile(xs, 0.05),
            p95: quantile(xs, 0.95),
        }
    }
}

/// Outcome distribution of one strategy under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCell {
    /// `baseline` or `kind/label`.
    pub scenario: String,
    pub kind: Option<ScenarioKind>,
    pub label: Option<SeverityLabel>,
    pub severity: f64,
    pub strategy: String,
    /// Total profit over the horizon.
    pub profit: DistSummary,
    pub churn: DistSummary,
    /// Mean scenario profit over the same strategy's mean baseline profit.
    pub performance_index: f64,
    /// Monte Carlo standard error of the index, from paired draws.
    pub performance_index_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEnvelope {
    pub n_mc: usize,
    pub horizon: usize,
    pub seed: u64,
    pub strategies: Vec<String>,
    pub baseline: Vec<EnvelopeCell>,
    pub cells: Vec<EnvelopeCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StressConfig {
    pub n_mc: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for StressConfig {
    fn default() -> Self {
        StressConfig {
            n_mc: 200,
            horizon: 12,
            seed: 0,
        }
    }
}

struct Draws {
    profit: Vec<f64>,
    churn: Vec<f64>,
}

fn simulate_draws(
    market: &GroundTruth,
    schedule: &PriceSchedule,
    cfg: &StressConfig,
) -> Result<Draws> {
    let mut profit = Vec::with_capacity(cfg.n_mc);
    let mut churn = Vec::with_capacity(cfg.n_mc);
    for d in 0..cfg.n_mc {
        let out: RealizedOutcomes = simulate_market(
            market,
            schedule,
            cfg.horizon,
            derive_seed(cfg.seed, "stress-mc", d as u64),
        )?;
        profit.push(out.total_profit());
        churn.push(out.churn_rate());
    }
    Ok(Draws { profit, churn })
}

fn cell(
    scenario: Option<&ScenarioSpec>,
    strategy: &str,
    draws: &Draws,
    base: &[f64],
) -> EnvelopeCell {
    let base_mean = mean(base);
    let index = mean(&draws.profit) / base_mean;
    // Delta method for a ratio of paired means.
    let lin: Vec<f64> = draws
        .profit
        .iter()
        .zip(base)
        .map(|(x, y)| x - index * y)
        .collect();
    let se = std_dev(&lin) / (draws.profit.len() as f64).sqrt() / base_mean.abs();
    EnvelopeCell {
        scenario: scenario.map_or_else(|| "baseline".to_string(), ScenarioSpec::name),
        kind: scenario.map(|s| s.kind),
        label: scenario.map(|s| s.label),
        severity: scenario.map_or(0.0, |s| s.severity),
        strategy: strategy.to_string(),
        profit: DistSummary::of(&draws.profit),
        churn: DistSummary::of(&draws.churn),
        performance_index: index.max(0.0),
        performance_index_se: se,
    }
}

/// Monte Carlo stress test of every strategy under every scenario.
///
/// Draw `d` of every cell uses the same simulation seed, so differences
/// between cells reflect the scenario and the prices, not sampling noise.
pub fn run_stress(
    truth: &GroundTruth,
    strategies: &[&dyn PricingPolicy],
    scenarios: &[ScenarioSpec],
    cfg: &StressConfig,
) -> Result<RiskEnvelope> {
    if cfg.n_mc < 100 {
        return Err(Error::config(format!(
            "n_mc must be at least 100, got {}",
            cfg.n_mc
        )));
    }
    if cfg.horizon == 0 {
        return Err(Error::config("stress horizon must be positive"));
    }
    if strategies.is_empty() {
        return Err(Error::EmptyInput("no strategies to stress".into()));
    }
    for s in scenarios {
        s.validate()?;
    }
    let stressed: Vec<GroundTruth> = scenarios
        .iter()
        .map(|s| apply_stress(truth, s))
        .collect::<Result<_>>()?;
    let per_strategy: Vec<Result<(EnvelopeCell, Vec<EnvelopeCell>)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = strategies
                .iter()
                .map(|policy| {
                    let stressed = &stressed;
                    scope.spawn(move || {
                        let base =
                            simulate_draws(truth, &policy.schedule(truth, cfg.horizon)?, cfg)?;
                        let baseline = cell(None, policy.name(), &base, &base.profit);
                        let mut cells = Vec::with_capacity(scenarios.len());
                        for (spec, market) in scenarios.iter().zip(stressed) {
                            let draws = simulate_draws(
                                market,
                                &policy.schedule(market, cfg.horizon)?,
                                cfg,
                            )?;
                            cells.push(cell(Some(spec), policy.name(), &draws, &base.profit));
                        }
                        Ok((baseline, cells))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("stress worker panicked"))
                .collect()
        });
    let mut baseline = Vec::new();
    let mut by_strategy = Vec::new();
    for r in per_strategy {
        let (b, c) = r?;
        baseline.push(b);
        by_strategy.push(c);
    }
    // Scenario-major order: all strategies for scenario 0, then scenario 1, ...
    let cells = (0..scenarios.len())
        .flat_map(|k| by_strategy.iter().map(move |c| c[k].clone()))
        .collect();
    Ok(RiskEnvelope {
        n_mc: cfg.n_mc,
        horizon: cfg.horizon,
        seed: cfg.seed,
        strategies: strategies.iter().map(|s| s.name().to_string()).collect(),
        baseline,
        cells,
    })
}

impl RiskEnvelope {
    pub fn cell(&self, scenario: &str, strategy: &str) -> Option<&EnvelopeCell> {
        self.baseline
            .iter()
            .chain(&self.cells)
            .find(|c| c.scenario == scenario && c.strategy == strategy)
    }

    /// Fixed-width table of the scenario ladder, one column per strategy.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "performance index = mean scenario profit / same strategy's mean baseline profit"
        );
        let _ = writeln!(
            out,
            "({} Monte Carlo draws, horizon {} periods, seed {})",
            self.n_mc, self.horizon, self.seed
        );
        let _ = write!(out, "{:<28} {:>8}", "scenario", "severity");
        for s in &self.strategies {
            let _ = write!(out, " {s:>22}");
        }
        out.push('\n');
        let mut scenarios: Vec<(&str, f64)> = vec![("baseline", 0.0)];
        for c in &self.cells {
            if !scenarios.iter().any(|(n, _)| *n == c.scenario) {
                scenarios.push((&c.scenario, c.severity));
            }
        }
        for (name, severity) in scenarios {
            let _ = write!(out, "{name:<28} {severity:>8.3}");
            for s in &self.strategies {
                match self.cell(name, s) {
                    Some(c) => {
                        let _ = write!(
                            out,
                            " {:>13.4} ± {:<6.4}",
                            c.performance_index, c.performance_index_se
                        );
                    }
                    None => {
                        let _ = write!(out, " {:>22}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// One CSV row per cell, baseline cells first.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scenario",
            "severity",
            "strategy",
            "profit_mean",
            "profit_p5",
            "profit_p95",
            "churn_mean",
            "churn_p5",
            "churn_p95",
            "performance_index",
            "performance_index_se",
        ])?;
        for c in self.baseline.iter().chain(&self.cells) {
            w.write_record([
                c.scenario.clone(),
                c.severity.to_string(),
                c.strategy.clone(),
                c.profit.mean.to_string(),
                c.profit.p5.to_string(),
                c.profit.p95.to_string(),
                c.churn.mean.to_string(),
                c.churn.p5.to_string(),
                c.churn.p95.to_string(),
                c.performance_index.to_string(),
                c.performance_index_se.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Early warning
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlertConfig {
    /// Absolute rise in the churn rate over its rolling baseline.
    pub churn_spike_threshold: f64,
    /// Relative fall in profit below its rolling baseline.
    pub profit_drawdown_threshold: f64,
    /// Length of the rolling baseline window.
    pub lead_periods: usize,
}

impl Default for AlertConfig {
    fn default() -> Self {
        AlertConfig {
            churn_spike_threshold: 0.02,
            profit_drawdown_threshold: 0.15,
            lead_periods: 3,
        }
    }
}

impl AlertConfig {
    pub fn validate(&self) -> Result<()> {
        if self.churn_spike_threshold > 0.0
            && self.profit_drawdown_threshold > 0.0
            && self.lead_periods >= 1
        {
            Ok(())
        } else {
            Err(Error::config(
                "alert thresholds must be positive and lead_periods at least 1",
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertMetric {
    ChurnSpike,
    ProfitDrawdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub segment: String,
    pub metric: AlertMetric,
    pub trigger_period: i64,
    pub value: f64,
    pub baseline: f64,
    pub threshold: f64,
    /// Envelope scenario whose mean outcome is closest to what was observed.
    pub nearest_scenario: Option<String>,
}

fn nearest_scenario(
    envelope: Option<&RiskEnvelope>,
    pick: impl Fn(&EnvelopeCell) -> f64,
    target: f64,
) -> Option<String> {
    let env = envelope?;
    let first = env.strategies.first()?;
    env.cells
        .iter()
        .filter(|c| &c.strategy == first)
        .min_by(|a, b| {
            (pick(a) - target)
                .abs()
                .total_cmp(&(pick(b) - target).abs())
        })
        .map(|c| c.scenario.clone())
}

/// Scans per-period outcomes for churn spikes and profit drawdowns.
///
/// Each period is compared with the mean of the `lead_periods` periods
/// before it. An alert fires when a condition starts to hold; crossings
/// exactly at a threshold count.
pub fn early_warning(
    envelope: Option<&RiskEnvelope>,
    observed: &RealizedOutcomes,
    cfg: &AlertConfig,
) -> Result<Vec<Alert>> {
    cfg.validate()?;
    let l = cfg.lead_periods;
    if observed.horizon <= l {
        return Err(Error::SpanTooShort(format!(
            "{} observed periods for a {l}-period baseline",
            observed.horizon
        )));
    }
    let total_base = envelope
        .and_then(|e| e.baseline.first())
        .map(|c| c.profit.mean);
    let mut alerts = Vec::new();
    for seg in &observed.segments {
        let churn: Vec<f64> = seg
            .quantity
            .iter()
            .zip(&seg.churned)
            .map(|(&q, &k)| if q == 0 { 0.0 } else { k as f64 / q as f64 })
            .collect();
        let mut active = [false, false];
        for t in l..seg.periods.len() {
            let churn_base = mean(&churn[t - l..t]);
            let profit_base = mean(&seg.profit[t - l..t]);
            let spike = churn[t] - churn_base;
            let drawdown = if profit_base > 0.0 {
                (profit_base - seg.profit[t]) / profit_base
            } else {
                0.0
            };
            let checks = [
                (
                    AlertMetric::ChurnSpike,
                    spike >= cfg.churn_spike_threshold,
                    churn[t],
                    churn_base,
                    cfg.churn_spike_threshold,
                ),
                (
                    AlertMetric::ProfitDrawdown,
                    drawdown >= cfg.profit_drawdown_threshold,
                    seg.profit[t],
                    profit_base,
                    cfg.profit_drawdown_threshold,
                ),
            ];
            for (slot, (metric, hit, value, baseline, threshold)) in checks.into_iter().enumerate()
            {
                if hit && !active[slot] {
                    let nearest = match metric {
                        AlertMetric::ChurnSpike => {
                            nearest_scenario(envelope, |c| c.churn.mean, value)
                        }
                        AlertMetric::ProfitDrawdown => total_base.and_then(|_| {
                            nearest_scenario(envelope, |c| c.performance_index, 1.0 - drawdown)
                        }),
                    };
                    alerts.push(Alert {
                        segment: seg.segment_id.clone(),
                        metric,
                        trigger_period: seg.periods[t],
                        value,
                        baseline,
                        threshold,
                        nearest_scenario: nearest,
                    });
                }
                active[slot] = hit;
            }
        }
    }
    Ok(alerts)
}
