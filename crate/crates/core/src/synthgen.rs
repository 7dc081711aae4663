//! Synthetic subscription populations with known parameters, and a market
//! simulator that plays any price schedule against them.
//!
//! Demand follows a constant-elasticity log-linear law with shared Fourier
//! seasonality and covariate effects:
//!
//! ```text
//! log Q = α_s + log(m) + β_s·log P + γ·x + Σ_k [a_k cos(2πkt/T) + b_k sin(2πkt/T)] + η,   η ~ N(0, σ²)
//! ```
//!
//! where `m` is the demand multiplier used by stress scenarios and
//! `β_s ~ N(μ_β, σ²_β)`. The cohort active at period `t` cancels with the
//! probability of the lagged logistic churn model; those cancellations are
//! recorded on the panel row of period `t + 1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::churn::{ChurnDataset, ChurnModel, ChurnRow};
use crate::error::{Error, Result};
use crate::num::sigmoid;
use crate::panel::{
    build_panel, FeatureKind, FeatureSchema, FeatureValue, SubscriptionPanel, SubscriptionRecord,
};
use crate::risk::{ScenarioKind, ScenarioSpec};
use crate::rng::{stream, StreamRng};

/// Numeric covariates emitted when covariates are enabled, in schema order.
pub const COVARIATES: [&str; 4] = ["usage", "support", "marketing", "competitor"];
pub const TIER: &str = "tier";
pub const TIERS: [&str; 3] = ["basic", "pro", "enterprise"];

// ---------------------------------------------------------------------------
// Configuration and ground truth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_segments: usize,
    pub n_periods: usize,
    pub seasonal_period: usize,
    /// Number of Fourier harmonic pairs in the true seasonal pattern.
    pub seasonal_harmonics: usize,
    /// Amplitude of the first harmonic, in log-demand units. Zero disables seasonality.
    pub seasonal_amplitude: f64,
    /// Share of periods carrying a randomized log-normal price perturbation.
    pub experiment_fraction: f64,
    pub perturbation_sd: f64,
    /// Step sd of the slow mean-reverting drift in log price.
    pub drift_sd: f64,
    pub noise_sigma: f64,
    pub mu_beta: f64,
    pub sigma_beta: f64,
    pub with_covariates: bool,
    /// Range of baseline active subscriptions per segment (log-uniform).
    pub quantity_range: (f64, f64),
    pub cost_range: (f64, f64),
    /// Baseline price as a multiple of unit cost (uniform).
    pub markup_range: (f64, f64),
    /// Ground-truth churn coefficients; `None` uses [`default_churn_truth`].
    pub churn: Option<ChurnModel>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_segments: 20,
            n_periods: 36,
            seasonal_period: 12,
            seasonal_harmonics: 2,
            seasonal_amplitude: 0.08,
            experiment_fraction: 0.3,
            perturbation_sd: 0.4,
            drift_sd: 0.02,
            noise_sigma: 0.05,
            mu_beta: -2.0,
            sigma_beta: 0.4,
            with_covariates: true,
            quantity_range: (500.0, 5000.0),
            cost_range: (8.0, 20.0),
            markup_range: (1.6, 2.4),
            churn: None,
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_segments > 0
            && self.n_periods > 0
            && self.seasonal_period >= 2
            && (0.0..=1.0).contains(&self.experiment_fraction)
            && self.perturbation_sd >= 0.0
            && self.drift_sd >= 0.0
            && self.noise_sigma > 0.0
            && self.sigma_beta >= 0.0
            && self.seasonal_amplitude >= 0.0
            && self.quantity_range.0 >= 1.0
            && self.quantity_range.0 <= self.quantity_range.1
            && self.cost_range.0 >= 0.0
            && self.cost_range.0 <= self.cost_range.1
            && self.markup_range.0 > 0.0
            && self.markup_range.0 <= self.markup_range.1;
        if !ok {
            return Err(Error::config("generator configuration out of range"));
        }
        if let Some(m) = &self.churn {
            let expected: Vec<&str> = if self.with_covariates {
                COVARIATES.to_vec()
            } else {
                vec![]
            };
            if m.feature_names() != expected {
                return Err(Error::SchemaMismatch(format!(
                    "churn truth features must be {expected:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Default churn coefficients: roughly 2-10% per-period churn over the
/// default price range, rising with price and support load.
pub fn default_churn_truth(with_covariates: bool) -> ChurnModel {
    let theta3 = if with_covariates {
        vec![
            ("usage".into(), -0.3),
            ("support".into(), 0.25),
            ("marketing".into(), 0.0),
            ("competitor".into(), -2.0),
        ]
    } else {
        vec![]
    };
    ChurnModel {
        theta0: -4.2,
        theta1: 0.03,
        theta2: 0.01,
        theta3,
        theta4: -0.02,
        l1_lambda: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTruth {
    pub segment_id: String,
    pub tier: String,
    pub alpha: f64,
    pub beta: f64,
    pub unit_cost: f64,
    pub base_price: f64,
    /// Price in force at the last generated (or simulated) period.
    pub last_price: f64,
    pub tenure0: f64,
    /// Cancellations of the last period's cohort, not yet recorded on a row.
    pub pending_churn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub segments: Vec<SegmentTruth>,
    /// Demand effects of the covariates shared by all segments.
    pub gamma: BTreeMap<String, f64>,
    /// The competitor covariate enters log demand with coefficient `ratio·|β_s|`.
    pub competitor_ratio: f64,
    pub seasonal_period: usize,
    /// `(a_k, b_k)` for harmonics `k = 1..`.
    pub seasonal_amplitudes: Vec<(f64, f64)>,
    pub noise_sigma: f64,
    pub churn_params: ChurnModel,
    pub population_mu_beta: f64,
    pub population_sigma_beta: f64,
    pub with_covariates: bool,
    pub marketing_rate: f64,
    pub competitor_sd: f64,
    pub tenure_growth: f64,
    pub demand_multiplier: f64,
    /// Mean of the competitor covariate (log price index).
    pub competitor_shift: f64,
    /// First period the simulator will produce.
    pub next_period: i64,
}

impl GroundTruth {
    pub fn segment_index(&self, id: &str) -> Result<usize> {
        self.segments
            .iter()
            .position(|s| s.segment_id == id)
            .ok_or_else(|| Error::UnknownSegment(id.to_string()))
    }

    pub fn covariate_names(&self) -> Vec<String> {
        if self.with_covariates {
            COVARIATES.iter().map(|s| s.to_string()).collect()
        } else {
            vec![]
        }
    }

    pub fn schema(&self) -> FeatureSchema {
        if self.with_covariates {
            let mut f: Vec<(&str, FeatureKind)> = COVARIATES
                .iter()
                .map(|n| (*n, FeatureKind::Numeric))
                .collect();
            f.push((TIER, FeatureKind::Categorical));
            FeatureSchema::new(f)
        } else {
            FeatureSchema::new(Vec::<(&str, FeatureKind)>::new())
        }
    }

    /// Demand coefficients of segment `i` in [`Self::covariate_names`] order.
    pub fn segment_gamma(&self, i: usize) -> Vec<f64> {
        self.covariate_names()
            .iter()
            .map(|n| {
                if n == "competitor" {
                    self.competitor_ratio * self.segments[i].beta.abs()
                } else {
                    self.gamma.get(n).copied().unwrap_or(0.0)
                }
            })
            .collect()
    }

    /// Mean covariate vector of the current regime.
    pub fn reference_covariates(&self) -> Vec<f64> {
        if self.with_covariates {
            vec![0.0, 0.0, self.marketing_rate, self.competitor_shift]
        } else {
            vec![]
        }
    }

    pub fn seasonal(&self, period: i64) -> f64 {
        self.seasonal_amplitudes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = 2.0 * PI * (k + 1) as f64 * period as f64 / self.seasonal_period as f64;
                a * w.cos() + b * w.sin()
            })
            .sum()
    }

    /// Log of median demand (before the multiplicative noise).
    pub fn log_demand(&self, i: usize, price: f64, covariates: &[f64], period: i64) -> f64 {
        let s = &self.segments[i];
        let cov: f64 = self
            .segment_gamma(i)
            .iter()
            .zip(covariates)
            .map(|(g, x)| g * x)
            .sum();
        s.alpha + self.demand_multiplier.ln() + s.beta * price.ln() + cov + self.seasonal(period)
    }

    pub fn tenure(&self, i: usize, period: i64) -> f64 {
        self.segments[i].tenure0 + self.tenure_growth * (period - 1).max(0) as f64
    }

    pub fn churn_probability(
        &self,
        price: f64,
        prev_price: f64,
        covariates: &[f64],
        tenure: f64,
    ) -> f64 {
        let m = &self.churn_params;
        let x: f64 = m
            .theta3
            .iter()
            .zip(covariates)
            .map(|((_, c), x)| c * x)
            .sum();
        sigmoid(m.theta0 + m.theta1 * price + m.theta2 * prev_price + x + m.theta4 * tenure)
    }

    fn draw_covariates(&self, rng: &mut StreamRng) -> Vec<f64> {
        if !self.with_covariates {
            return vec![];
        }
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let usage = std.sample(rng);
        let support = std.sample(rng);
        let marketing = if rng.random::<f64>() < self.marketing_rate {
            1.0
        } else {
            0.0
        };
        let competitor = self.competitor_shift + self.competitor_sd * std.sample(rng);
        vec![usage, support, marketing, competitor]
    }

    /// Moves the simulator clock past `outcomes`, so the next simulation
    /// continues where they ended.
    pub fn advance(&self, outcomes: &RealizedOutcomes) -> Result<GroundTruth> {
        let mut next = self.clone();
        for o in &outcomes.segments {
            let i = next.segment_index(&o.segment_id)?;
            if let (Some(&p), Some(&k)) = (o.prices.last(), o.churned.last()) {
                next.segments[i].last_price = p;
                next.segments[i].pending_churn = k;
            }
        }
        next.next_period += outcomes.horizon as i64;
        Ok(next)
    }
}

// ---------------------------------------------------------------------------
// Population generation
// ---------------------------------------------------------------------------

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn binomial(rng: &mut StreamRng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0))
        .expect("valid binomial")
        .sample(rng)
}

fn quantity(log_mean: f64) -> u64 {
    log_mean.exp().round().clamp(0.0, u64::MAX as f64 / 2.0) as u64
}

/// Draws a population and its observed panel (periods `1..=n_periods`).
pub fn generate_population(cfg: &GenConfig) -> Result<(SubscriptionPanel, GroundTruth)> {
    cfg.validate()?;
    let seed = cfg.seed;
    let mut pop = stream(seed, "population", 0);
    let beta_dist =
        Normal::new(cfg.mu_beta, cfg.sigma_beta).map_err(|e| Error::config(e.to_string()))?;

    let mut season = stream(seed, "seasonality", 0);
    let seasonal_amplitudes = if cfg.seasonal_amplitude > 0.0 {
        (1..=cfg.seasonal_harmonics)
            .map(|k| {
                let amp = cfg.seasonal_amplitude / k as f64;
                let phase = uniform(&mut season, 0.0, 2.0 * PI);
                (amp * phase.cos(), amp * phase.sin())
            })
            .collect()
    } else {
        vec![]
    };

    let mut segments = Vec::with_capacity(cfg.n_segments);
    for i in 0..cfg.n_segments {
        let beta = if cfg.sigma_beta > 0.0 {
            beta_dist.sample(&mut pop).clamp(-3.5, -0.3)
        } else {
            cfg.mu_beta
        };
        let mut rng = stream(seed, "segment", i as u64);
        let unit_cost = uniform(&mut rng, cfg.cost_range.0, cfg.cost_range.1);
        let base_price = unit_cost * uniform(&mut rng, cfg.markup_range.0, cfg.markup_range.1);
        let q0 = uniform(
            &mut rng,
            cfg.quantity_range.0.ln(),
            cfg.quantity_range.1.ln(),
        );
        let tenure0 = uniform(&mut rng, 6.0, 36.0);
        segments.push(SegmentTruth {
            segment_id: format!("seg_{i:03}"),
            tier: TIERS[i % TIERS.len()].to_string(),
            alpha: q0 - beta * base_price.ln(),
            beta,
            unit_cost,
            base_price,
            last_price: base_price,
            tenure0,
            pending_churn: 0,
        });
    }

    let with_cov = cfg.with_covariates;
    let gamma: BTreeMap<String, f64> = if with_cov {
        [("usage", 0.10), ("support", -0.05), ("marketing", 0.08)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    } else {
        BTreeMap::new()
    };
    let mut truth = GroundTruth {
        segments,
        gamma,
        competitor_ratio: if with_cov { 0.5 } else { 0.0 },
        seasonal_period: cfg.seasonal_period,
        seasonal_amplitudes,
        noise_sigma: cfg.noise_sigma,
        churn_params: cfg
            .churn
            .clone()
            .unwrap_or_else(|| default_churn_truth(with_cov)),
        population_mu_beta: cfg.mu_beta,
        population_sigma_beta: cfg.sigma_beta,
        with_covariates: with_cov,
        marketing_rate: 0.3,
        competitor_sd: 0.05,
        tenure_growth: 0.1,
        demand_multiplier: 1.0,
        competitor_shift: 0.0,
        next_period: 1,
    };

    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut records = Vec::with_capacity(cfg.n_segments * cfg.n_periods);
    for i in 0..cfg.n_segments {
        let mut price_rng = stream(seed, "price", i as u64);
        let mut cov_rng = stream(seed, "covariates", i as u64);
        let mut noise_rng = stream(seed, "demand-noise", i as u64);
        let mut churn_rng = stream(seed, "churn", i as u64);
        let base = truth.segments[i].base_price;
        let mut drift = 0.0;
        let mut prev_price = base;
        let mut list_price = base;
        let mut pending: Option<u64> = None;
        for t in 1..=cfg.n_periods as i64 {
            if cfg.drift_sd > 0.0 {
                drift += cfg.drift_sd
                    * Normal::new(0.0, 1.0)
                        .expect("unit normal")
                        .sample(&mut price_rng);
            }
            let experiment = price_rng.random::<f64>() < cfg.experiment_fraction;
            let bump = if experiment && cfg.perturbation_sd > 0.0 {
                cfg.perturbation_sd
                    * Normal::new(0.0, 1.0)
                        .expect("unit normal")
                        .sample(&mut price_rng)
            } else {
                0.0
            };
            list_price = base * drift.exp();
            let price = list_price * bump.exp();
            let x = truth.draw_covariates(&mut cov_rng);
            let q = quantity(truth.log_demand(i, price, &x, t) + noise.sample(&mut noise_rng));
            let tenure = truth.tenure(i, t);
            let p_churn = truth.churn_probability(price, prev_price, &x, tenure);
            let recorded = match pending {
                Some(k) => k,
                // Cohort preceding the panel, at the baseline price.
                None => binomial(
                    &mut churn_rng,
                    q,
                    truth.churn_probability(base, base, &truth.reference_covariates(), tenure),
                ),
            };
            let k = binomial(&mut churn_rng, q, p_churn);
            pending = Some(k);
            let mut covariates: BTreeMap<String, FeatureValue> = truth
                .covariate_names()
                .into_iter()
                .zip(x.iter().map(|v| FeatureValue::Num(*v)))
                .collect();
            if with_cov {
                covariates.insert(
                    TIER.to_string(),
                    FeatureValue::Cat(truth.segments[i].tier.clone()),
                );
            }
            records.push(SubscriptionRecord {
                segment_id: truth.segments[i].segment_id.clone(),
                period: t,
                price,
                quantity: q,
                unit_cost: truth.segments[i].unit_cost,
                churned: recorded.min(q),
                tenure,
                covariates,
            });
            prev_price = price;
        }
        truth.segments[i].last_price = list_price;
        truth.segments[i].pending_churn = pending.unwrap_or(0);
    }
    truth.next_period = cfg.n_periods as i64 + 1;
    let panel = build_panel(records, truth.schema())?;
    Ok((panel, truth))
}

// ---------------------------------------------------------------------------
// Market simulation
// ---------------------------------------------------------------------------

/// Per-segment price paths. A path of length one is held constant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub prices: BTreeMap<String, Vec<f64>>,
}

impl PriceSchedule {
    pub fn constant(prices: impl IntoIterator<Item = (String, f64)>) -> Self {
        PriceSchedule {
            prices: prices.into_iter().map(|(k, p)| (k, vec![p])).collect(),
        }
    }

    fn path(&self, segment: &str, horizon: usize) -> Result<Vec<f64>> {
        let path = self
            .prices
            .get(segment)
            .ok_or_else(|| Error::MissingSegmentPrice(segment.to_string()))?;
        let full = match path.len() {
            1 => vec![path[0]; horizon],
            n if n >= horizon => path[..horizon].to_vec(),
            n => {
                return Err(Error::LengthMismatch(format!(
                    "price path for `{segment}` has {n} periods, horizon is {horizon}"
                )))
            }
        };
        if full.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidRecord(format!(
                "non-positive price for `{segment}`"
            )));
        }
        Ok(full)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub segment_id: String,
    pub periods: Vec<i64>,
    pub prices: Vec<f64>,
    pub quantity: Vec<u64>,
    /// Cancellations of each period's cohort.
    pub churned: Vec<u64>,
    pub revenue: Vec<f64>,
    /// `(p - c)·(q - churned)`.
    pub profit: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
    pub tenure: Vec<f64>,
    pub unit_cost: f64,
}

impl SegmentOutcome {
    pub fn total_profit(&self) -> f64 {
        self.profit.iter().sum()
    }

    pub fn churn_rate(&self) -> f64 {
        let q: u64 = self.quantity.iter().sum();
        if q == 0 {
            0.0
        } else {
            self.churned.iter().sum::<u64>() as f64 / q as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedOutcomes {
    pub horizon: usize,
    pub segments: Vec<SegmentOutcome>,
}

impl RealizedOutcomes {
    pub fn total_revenue(&self) -> f64 {
        self.segments.iter().flat_map(|s| &s.revenue).sum()
    }

    pub fn total_profit(&self) -> f64 {
        self.segments.iter().map(SegmentOutcome::total_profit).sum()
    }

    /// Subscriber-weighted churn rate over all segments and periods.
    pub fn churn_rate(&self) -> f64 {
        let q: u64 = self.segments.iter().flat_map(|s| &s.quantity).sum();
        let k: u64 = self.segments.iter().flat_map(|s| &s.churned).sum();
        if q == 0 {
            0.0
        } else {
            k as f64 / q as f64
        }
    }

    /// Panel rows for these outcomes, with each cohort's cancellations
    /// recorded one period later (the first row carries `truth`'s pending count).
    pub fn to_records(&self, truth: &GroundTruth) -> Result<Vec<SubscriptionRecord>> {
        let names = truth.covariate_names();
        let mut out = Vec::new();
        for o in &self.segments {
            let i = truth.segment_index(&o.segment_id)?;
            let mut carried = truth.segments[i].pending_churn;
            for t in 0..o.periods.len() {
                let mut covariates: BTreeMap<String, FeatureValue> = names
                    .iter()
                    .cloned()
                    .zip(o.covariates[t].iter().map(|v| FeatureValue::Num(*v)))
                    .collect();
                if truth.with_covariates {
                    covariates.insert(
                        TIER.to_string(),
                        FeatureValue::Cat(truth.segments[i].tier.clone()),
                    );
                }
                out.push(SubscriptionRecord {
                    segment_id: o.segment_id.clone(),
                    period: o.periods[t],
                    price: o.prices[t],
                    quantity: o.quantity[t],
                    unit_cost: o.unit_cost,
                    churned: carried.min(o.quantity[t]),
                    tenure: o.tenure[t],
                    covariates,
                });
                carried = o.churned[t];
            }
        }
        Ok(out)
    }
}

/// Plays `schedule` for `horizon` periods starting at `truth.next_period`.
///
/// Covariates, demand noise and churn draws come from per-segment streams of
/// `seed`, so two schedules (or two stressed truths) simulated with the same
/// seed share their random numbers.
pub fn simulate_market(
    truth: &GroundTruth,
    schedule: &PriceSchedule,
    horizon: usize,
    seed: u64,
) -> Result<RealizedOutcomes> {
    let noise = Normal::new(0.0, truth.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut segments = Vec::with_capacity(truth.segments.len());
    for (i, seg) in truth.segments.iter().enumerate() {
        let path = schedule.path(&seg.segment_id, horizon)?;
        let mut cov_rng = stream(seed, "sim-covariates", i as u64);
        let mut noise_rng = stream(seed, "sim-noise", i as u64);
        let mut churn_rng = stream(seed, "sim-churn", i as u64);
        let mut out = SegmentOutcome {
            segment_id: seg.segment_id.clone(),
            periods: Vec::with_capacity(horizon),
            prices: path.clone(),
            quantity: Vec::with_capacity(horizon),
            churned: Vec::with_capacity(horizon),
            revenue: Vec::with_capacity(horizon),
            profit: Vec::with_capacity(horizon),
            covariates: Vec::with_capacity(horizon),
            tenure: Vec::with_capacity(horizon),
            unit_cost: seg.unit_cost,
        };
        let mut prev = seg.last_price;
        for (h, &p) in path.iter().enumerate() {
            let t = truth.next_period + h as i64;
            let x = truth.draw_covariates(&mut cov_rng);
            let q = quantity(truth.log_demand(i, p, &x, t) + noise.sample(&mut noise_rng));
            let tenure = truth.tenure(i, t);
            let k = binomial(
                &mut churn_rng,
                q,
                truth.churn_probability(p, prev, &x, tenure),
            );
            out.periods.push(t);
            out.quantity.push(q);
            out.churned.push(k);
            out.revenue.push(p * q as f64);
            out.profit.push((p - seg.unit_cost) * (q - k) as f64);
            out.covariates.push(x);
            out.tenure.push(tenure);
            prev = p;
        }
        segments.push(out);
    }
    Ok(RealizedOutcomes { horizon, segments })
}

/// Applies a stress scenario to the ground truth.
pub fn apply_stress(truth: &GroundTruth, scenario: &ScenarioSpec) -> Result<GroundTruth> {
    scenario.validate()?;
    let s = scenario.severity;
    let mut out = truth.clone();
    match scenario.kind {
        ScenarioKind::DemandDownturn => out.demand_multiplier *= 1.0 - s,
        ScenarioKind::CostInflation => out
            .segments
            .iter_mut()
            .for_each(|seg| seg.unit_cost *= 1.0 + s),
        ScenarioKind::CompetitorCut => out.competitor_shift -= s,
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Direct generators for model-recovery checks
// ---------------------------------------------------------------------------

/// Independent churn rows labeled by Bernoulli draws from `model`.
///
/// Prices are uniform on `[10, 60]`, the lagged price varies independently
/// around the current one, features are standard normal and tenure is
/// uniform on `[0, 48]`.
pub fn generate_churn_rows(model: &ChurnModel, n_rows: usize, seed: u64) -> ChurnDataset {
    let mut rng = stream(seed, "churn-rows", 0);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let k = model.theta3.len();
    let rows = (0..n_rows)
        .map(|_| {
            let price: f64 = rng.random_range(10.0..60.0);
            let shock: f64 = std.sample(&mut rng);
            let prev_price = price * (0.15 * shock).exp();
            let features: Vec<f64> = (0..k).map(|_| std.sample(&mut rng)).collect();
            let tenure = rng.random_range(0.0..48.0);
            let p = sigmoid(
                model
                    .logit(price, prev_price, &features, tenure)
                    .expect("feature count matches"),
            );
            let label = rng.random::<f64>() < p;
            ChurnRow {
                price,
                prev_price,
                features,
                tenure,
                label,
                weight: 1.0,
            }
        })
        .collect();
    ChurnDataset {
        feature_names: model
            .feature_names()
            .into_iter()
            .map(String::from)
            .collect(),
        rows,
        window: 1,
    }
}

/// Configuration of a multi-product panel with known own- and cross-price
/// elasticities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossGenConfig {
    /// `elasticities[i][j]`: elasticity of product `i`'s demand to product `j`'s price.
    pub elasticities: Vec<Vec<f64>>,
    pub n_periods: usize,
    pub noise_sigma: f64,
    /// Sd of log-price variation around each product's base price.
    pub price_sd: f64,
    /// Correlation of log-price variation across products.
    pub price_correlation: f64,
    pub seed: u64,
}

/// Panel with one segment per product (`product_0`, `product_1`, ...) sharing periods.
pub fn generate_cross_panel(cfg: &CrossGenConfig) -> Result<SubscriptionPanel> {
    let n = cfg.elasticities.len();
    if n == 0 || cfg.elasticities.iter().any(|r| r.len() != n) || cfg.n_periods == 0 {
        return Err(Error::config(
            "elasticity matrix must be square and non-empty",
        ));
    }
    if !(cfg.noise_sigma > 0.0)
        || cfg.price_sd < 0.0
        || !(-1.0..=1.0).contains(&cfg.price_correlation)
    {
        return Err(Error::config(
            "cross generator needs noise_sigma > 0, price_sd >= 0, |correlation| <= 1",
        ));
    }
    let mut rng = stream(cfg.seed, "cross", 0);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let base: Vec<f64> = (0..n).map(|_| rng.random_range(15.0..40.0)).collect();
    let level: Vec<f64> = (0..n)
        .map(|_| rng.random_range(2000.0_f64.ln()..4000.0_f64.ln()))
        .collect();
    let rho = cfg.price_correlation;
    let mut records = Vec::with_capacity(n * cfg.n_periods);
    for t in 1..=cfg.n_periods as i64 {
        let common = std.sample(&mut rng);
        let log_p: Vec<f64> = (0..n)
            .map(|j| {
                base[j].ln()
                    + cfg.price_sd
                        * (rho * common + (1.0 - rho * rho).sqrt() * std.sample(&mut rng))
            })
            .collect();
        for i in 0..n {
            let rel: f64 = (0..n)
                .map(|j| cfg.elasticities[i][j] * (log_p[j] - base[j].ln()))
                .sum();
            let q = quantity(level[i] + rel + cfg.noise_sigma * std.sample(&mut rng));
            records.push(SubscriptionRecord {
                segment_id: format!("product_{i}"),
                period: t,
                price: log_p[i].exp(),
                quantity: q,
                unit_cost: 0.5 * base[i],
                churned: 0,
                tenure: 0.0,
                covariates: BTreeMap::new(),
            });
        }
    }
    build_panel(
        records,
        FeatureSchema::new(Vec::<(&str, FeatureKind)>::new()),
    )
}
