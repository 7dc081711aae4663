//! Constrained profit maximization over segment prices.
//!
//! Each segment contributes `(p − c)·A·p^β·(1 − churn(p))` to the objective.
//! Per-segment guardrails (price box, margin floor, churn cap, volume floor)
//! are all monotone in price, so they collapse into a single feasible interval
//! per segment. Fairness ratio caps couple segments and are handled by an
//! augmented Lagrangian on `ln p_i − ln p_j ≤ ln δ`. The inner problem is
//! minimized by projected diagonal-Newton steps in log-price coordinates.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::churn::ChurnModel;
use crate::elasticity::ElasticityEstimate;
use crate::error::{Error, Result};
use crate::num::{logit, sigmoid, Real};
use crate::panel::{FeatureValue, SubscriptionPanel};
use crate::rng::stream;
use crate::stats::median;
use crate::synthgen::TIER;

// ---------------------------------------------------------------------------
// Guardrails
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBounds {
    pub lo: f64,
    pub hi: f64,
}

/// Ratio cap `p_i / p_j ≤ delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessPair {
    pub i: String,
    pub j: String,
    pub delta: f64,
}

/// User-chosen business limits. Per-segment maps override the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardrailConfig {
    pub churn_max: BTreeMap<String, f64>,
    pub default_churn_max: f64,
    pub margin_min: f64,
    pub fairness_pairs: Vec<FairnessPair>,
    pub volume_min: BTreeMap<String, f64>,
    pub default_volume_min: f64,
    pub price_bounds: BTreeMap<String, PriceBounds>,
    pub default_price_bounds: Option<PriceBounds>,
    /// Bounds expressed as multiples of each segment's current price.
    pub relative_price_bounds: Option<PriceBounds>,
}

impl Default for GuardrailConfig {
    fn default() -> Self {
        GuardrailConfig {
            churn_max: BTreeMap::new(),
            default_churn_max: 1.0,
            margin_min: 0.0,
            fairness_pairs: Vec::new(),
            volume_min: BTreeMap::new(),
            default_volume_min: 0.0,
            price_bounds: BTreeMap::new(),
            default_price_bounds: None,
            relative_price_bounds: Some(PriceBounds { lo: 0.5, hi: 2.0 }),
        }
    }
}

impl GuardrailConfig {
    pub fn churn_max_for(&self, segment: &str) -> f64 {
        self.churn_max
            .get(segment)
            .copied()
            .unwrap_or(self.default_churn_max)
    }

    pub fn volume_min_for(&self, segment: &str) -> f64 {
        self.volume_min
            .get(segment)
            .copied()
            .unwrap_or(self.default_volume_min)
    }

    pub fn bounds_for(&self, segment: &str, current_price: f64) -> Option<PriceBounds> {
        if let Some(b) = self.price_bounds.get(segment) {
            return Some(*b);
        }
        if let Some(r) = self.relative_price_bounds {
            if current_price > 0.0 {
                return Some(PriceBounds {
                    lo: r.lo * current_price,
                    hi: r.hi * current_price,
                });
            }
        }
        self.default_price_bounds
    }
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

/// One decision variable with its demand, churn and guardrail data.
///
/// Churn is `σ(churn_intercept + churn_slope·p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentProblem {
    pub id: String,
    pub tier: Option<String>,
    /// `ln A_s`.
    pub log_scale: f64,
    pub beta: f64,
    pub unit_cost: f64,
    pub churn_intercept: f64,
    pub churn_slope: f64,
    pub churn_max: f64,
    pub volume_min: f64,
    pub price_lo: f64,
    pub price_hi: f64,
}

impl SegmentProblem {
    pub fn demand(&self, p: f64) -> f64 {
        (self.log_scale + self.beta * p.ln()).exp()
    }

    pub fn churn(&self, p: f64) -> f64 {
        sigmoid(self.churn_intercept + self.churn_slope * p)
    }

    pub fn profit(&self, p: f64) -> f64 {
        segment_profit(p.ln(), self)[0]
    }

    /// Feasible price interval implied by the segment's own guardrails.
    pub fn feasible_interval(&self, margin_min: f64) -> Option<(f64, f64)> {
        let mut lo = self.price_lo.max(self.unit_cost + margin_min);
        let mut hi = self.price_hi;
        if self.churn_max < 1.0 {
            let room = logit(self.churn_max) - self.churn_intercept;
            if self.churn_slope > 0.0 {
                hi = hi.min(room / self.churn_slope);
            } else if self.churn_slope < 0.0 {
                lo = lo.max(room / self.churn_slope);
            } else if room < 0.0 {
                return None;
            }
        }
        if self.volume_min > 0.0 {
            let edge = ((self.volume_min.ln() - self.log_scale) / self.beta).exp();
            if self.beta < 0.0 {
                hi = hi.min(edge);
            } else if self.beta > 0.0 {
                lo = lo.max(edge);
            } else if self.log_scale < self.volume_min.ln() {
                return None;
            }
        }
        (lo > 0.0 && lo <= hi).then_some((lo, hi))
    }
}

/// Profit of one segment and its first two derivatives in `x = ln p`.
pub fn segment_profit<T: Real>(x: T, seg: &SegmentProblem) -> [T; 3] {
    let lit = T::lit;
    let (c, beta, k) = (lit(seg.unit_cost), lit(seg.beta), lit(seg.churn_slope));
    let p = x.exp();
    let (m, m1) = (p - c, p);
    let q = (lit(seg.log_scale) + beta * x).exp();
    let (q1, q2) = (beta * q, beta * beta * q);
    let s = sigmoid(lit(seg.churn_intercept) + k * p);
    let ds = s * (T::one() - s);
    let z1 = k * p;
    let r = T::one() - s;
    let r1 = -ds * z1;
    let r2 = -ds * ((T::one() - lit(2.0) * s) * z1 * z1 + z1);
    let f = m * q * r;
    let f1 = m1 * q * r + m * q1 * r + m * q * r1;
    let f2 =
        m1 * q * r + m * q2 * r + m * q * r2 + lit(2.0) * (m1 * q1 * r + m1 * q * r1 + m * q1 * r1);
    [f, f1, f2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingProblem {
    pub segments: Vec<SegmentProblem>,
    pub margin_min: f64,
    pub fairness: Vec<FairnessPair>,
}

impl PricingProblem {
    /// Validates and assembles a problem.
    pub fn new(
        segments: Vec<SegmentProblem>,
        margin_min: f64,
        fairness: Vec<FairnessPair>,
    ) -> Result<Self> {
        let problem = PricingProblem {
            segments,
            margin_min,
            fairness,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::EmptyInput("pricing problem has no segments".into()));
        }
        if !(self.margin_min.is_finite() && self.margin_min >= 0.0) {
            return Err(Error::config("margin_min must be finite and >= 0"));
        }
        let mut seen = BTreeSet::new();
        for s in &self.segments {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::config(format!("segment `{}` appears twice", s.id)));
            }
            let incoherent = |detail: String| Error::IncoherentBounds {
                segment: s.id.clone(),
                detail,
            };
            if !(s.beta.is_finite()
                && s.log_scale.is_finite()
                && s.churn_intercept.is_finite()
                && s.churn_slope.is_finite())
            {
                return Err(Error::config(format!(
                    "segment `{}` has non-finite coefficients",
                    s.id
                )));
            }
            if !(s.unit_cost.is_finite() && s.unit_cost >= 0.0) {
                return Err(Error::config(format!(
                    "segment `{}` needs unit_cost >= 0",
                    s.id
                )));
            }
            if !(s.churn_max > 0.0 && s.churn_max <= 1.0) {
                return Err(Error::config(format!(
                    "segment `{}` needs churn_max in (0, 1]",
                    s.id
                )));
            }
            if !(s.volume_min.is_finite() && s.volume_min >= 0.0) {
                return Err(Error::config(format!(
                    "segment `{}` needs volume_min >= 0",
                    s.id
                )));
            }
            if !(s.price_lo > 0.0 && s.price_lo <= s.price_hi && s.price_hi.is_finite()) {
                return Err(incoherent(format!(
                    "price bounds [{}, {}]",
                    s.price_lo, s.price_hi
                )));
            }
            if s.unit_cost + self.margin_min > s.price_hi {
                return Err(incoherent(format!(
                    "margin floor {} exceeds upper price bound {}",
                    s.unit_cost + self.margin_min,
                    s.price_hi
                )));
            }
            if !(s.profit(s.price_lo).is_finite() && s.profit(s.price_hi).is_finite()) {
                return Err(incoherent(
                    "objective is not finite at the price bounds".into(),
                ));
            }
        }
        for f in &self.fairness {
            for id in [&f.i, &f.j] {
                if !seen.contains(id.as_str()) {
                    return Err(Error::UnknownSegment(id.clone()));
                }
            }
            if !(f.delta > 0.0 && f.delta.is_finite()) {
                return Err(Error::config(format!(
                    "fairness cap {}/{} needs delta > 0",
                    f.i, f.j
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn index_of(&self, id: &str) -> usize {
        self.segments
            .iter()
            .position(|s| s.id == id)
            .expect("validated segment id")
    }

    fn pairs(&self) -> Vec<(usize, usize, f64)> {
        self.fairness
            .iter()
            .map(|f| (self.index_of(&f.i), self.index_of(&f.j), f.delta))
            .collect()
    }

    /// Total profit at `prices` (segment order).
    pub fn objective(&self, prices: &[f64]) -> f64 {
        self.segments
            .iter()
            .zip(prices)
            .map(|(s, &p)| s.profit(p))
            .sum()
    }

    /// `∂objective/∂p_s`.
    pub fn gradient(&self, prices: &[f64]) -> Vec<f64> {
        self.segments
            .iter()
            .zip(prices)
            .map(|(s, &p)| segment_profit(p.ln(), s)[1] / p)
            .collect()
    }

    /// Restriction to the listed segments, keeping fairness pairs inside it.
    pub fn subproblem(&self, ids: &[&str]) -> PricingProblem {
        let keep: BTreeSet<&str> = ids.iter().copied().collect();
        PricingProblem {
            segments: self
                .segments
                .iter()
                .filter(|s| keep.contains(s.id.as_str()))
                .cloned()
                .collect(),
            margin_min: self.margin_min,
            fairness: self
                .fairness
                .iter()
                .filter(|f| keep.contains(f.i.as_str()) && keep.contains(f.j.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Evaluates every guardrail at `prices`.
    pub fn constraint_report(&self, prices: &[f64], tol: f64) -> Vec<ConstraintStatus> {
        let mut out = Vec::new();
        let mut push = |name: String, value: f64, bound: f64, slack: f64| {
            out.push(ConstraintStatus {
                name,
                value,
                bound,
                slack,
                binding: slack <= tol * bound.abs().max(1.0),
            });
        };
        for (s, &p) in self.segments.iter().zip(prices) {
            push(
                format!("price_lower:{}", s.id),
                p,
                s.price_lo,
                p - s.price_lo,
            );
            push(
                format!("price_upper:{}", s.id),
                p,
                s.price_hi,
                s.price_hi - p,
            );
            push(
                format!("margin_floor:{}", s.id),
                p - s.unit_cost,
                self.margin_min,
                p - s.unit_cost - self.margin_min,
            );
            if s.churn_max < 1.0 {
                let c = s.churn(p);
                push(
                    format!("churn_cap:{}", s.id),
                    c,
                    s.churn_max,
                    s.churn_max - c,
                );
            }
            if s.volume_min > 0.0 {
                let q = s.demand(p);
                push(
                    format!("volume_floor:{}", s.id),
                    q,
                    s.volume_min,
                    q - s.volume_min,
                );
            }
        }
        for (f, (i, j, delta)) in self.fairness.iter().zip(self.pairs()) {
            let ratio = prices[i] / prices[j];
            push(
                format!("fairness:{}/{}", f.i, f.j),
                ratio,
                delta,
                delta - ratio,
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Per-segment inputs that do not come from the demand posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentContext {
    pub segment: String,
    pub unit_cost: f64,
    pub current_price: f64,
    pub tenure: f64,
    /// Behavioral features in the churn model's order.
    pub churn_features: Option<Vec<f64>>,
    /// Demand covariates `z̄`; the posterior's segment means when absent.
    pub demand_covariates: Option<Vec<f64>>,
    pub tier: Option<String>,
}

/// Periods whose median price stands in for the prevailing list price, so a
/// one-off price test in the final period does not move it.
pub const LIST_PRICE_WINDOW: usize = 12;

/// Contexts from each segment's latest period, with churn features averaged
/// over its whole history.
pub fn contexts_from_panel(panel: &SubscriptionPanel, churn: &ChurnModel) -> Vec<SegmentContext> {
    let names = churn.feature_names();
    panel
        .iter_segments()
        .map(|(id, recs)| {
            let last = recs.last().expect("segments are non-empty");
            let recent: Vec<f64> = recs
                .iter()
                .rev()
                .take(LIST_PRICE_WINDOW)
                .map(|r| r.price)
                .collect();
            let churn_features: Option<Vec<f64>> = names
                .iter()
                .map(|n| {
                    let vals: Option<Vec<f64>> = recs
                        .iter()
                        .map(|r| r.covariates.get(*n).and_then(FeatureValue::as_num))
                        .collect();
                    vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect();
            let tier = match last.covariates.get(TIER) {
                Some(FeatureValue::Cat(t)) => Some(t.clone()),
                _ => None,
            };
            SegmentContext {
                segment: id.to_string(),
                unit_cost: last.unit_cost,
                current_price: median(&recent),
                tenure: last.tenure,
                churn_features,
                demand_covariates: None,
                tier,
            }
        })
        .collect()
}

/// Builds the optimization problem for the segments in `contexts`.
///
/// Churn is evaluated in steady state, with the lagged price equal to the
/// candidate price, so its price slope is `θ1 + θ2`.
pub fn build_problem(
    estimates: &[ElasticityEstimate],
    churn: &ChurnModel,
    contexts: &[SegmentContext],
    guardrails: &GuardrailConfig,
) -> Result<PricingProblem> {
    let mut segments = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        let est = estimates
            .iter()
            .find(|e| e.segment == ctx.segment)
            .ok_or_else(|| {
                Error::MissingEstimate(format!(
                    "no elasticity estimate for segment `{}`",
                    ctx.segment
                ))
            })?;
        let features = ctx.churn_features.as_deref().ok_or_else(|| {
            Error::MissingEstimate(format!("no churn features for segment `{}`", ctx.segment))
        })?;
        if features.len() != churn.theta3.len() || features.iter().any(|v| !v.is_finite()) {
            return Err(Error::MissingEstimate(format!(
                "segment `{}` has {} churn features, model expects {}",
                ctx.segment,
                features.len(),
                churn.theta3.len()
            )));
        }
        let z = ctx
            .demand_covariates
            .clone()
            .unwrap_or_else(|| est.reference_covariates());
        if z.len() != est.covariates.len() {
            return Err(Error::MissingEstimate(format!(
                "segment `{}` demand covariates",
                ctx.segment
            )));
        }
        let bounds = guardrails
            .bounds_for(&ctx.segment, ctx.current_price)
            .ok_or_else(|| {
                Error::MissingEstimate(format!("no price bounds for segment `{}`", ctx.segment))
            })?;
        let behavioral: f64 = churn
            .theta3
            .iter()
            .zip(features)
            .map(|((_, c), x)| c * x)
            .sum();
        segments.push(SegmentProblem {
            id: ctx.segment.clone(),
            tier: ctx.tier.clone(),
            log_scale: est.log_scale(&z),
            beta: est.beta.mean,
            unit_cost: ctx.unit_cost,
            churn_intercept: churn.theta0 + behavioral + churn.theta4 * ctx.tenure,
            churn_slope: churn.theta1 + churn.theta2,
            churn_max: guardrails.churn_max_for(&ctx.segment),
            volume_min: guardrails.volume_min_for(&ctx.segment),
            price_lo: bounds.lo,
            price_hi: bounds.hi,
        });
    }
    PricingProblem::new(
        segments,
        guardrails.margin_min,
        guardrails.fairness_pairs.clone(),
    )
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    FeasibleSuboptimal,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub binding: bool,
}

impl ConstraintStatus {
    pub fn violated(&self, tol: f64) -> bool {
        self.slack < -tol * self.bound.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveMetadata {
    /// Inner iterations used by each random start.
    pub start_iterations: Vec<usize>,
    pub warm_start_iterations: Option<usize>,
    /// Index of the winning start; `None` for the warm start or fallback.
    pub best_start: Option<usize>,
    pub decomposition: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSolution {
    pub prices: BTreeMap<String, f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub constraints: Vec<ConstraintStatus>,
    pub starts_used: usize,
    pub solve_ms: u64,
    #[serde(default)]
    pub metadata: SolveMetadata,
}

impl PricingSolution {
    /// Prices in the problem's segment order.
    pub fn price_vec(&self, problem: &PricingProblem) -> Vec<f64> {
        problem
            .segments
            .iter()
            .map(|s| self.prices[&s.id])
            .collect()
    }

    pub fn binding(&self) -> impl Iterator<Item = &ConstraintStatus> {
        self.constraints.iter().filter(|c| c.binding)
    }

    pub fn violations(&self, tol: f64) -> impl Iterator<Item = &ConstraintStatus> {
        self.constraints.iter().filter(move |c| c.violated(tol))
    }
}

fn assemble(
    problem: &PricingProblem,
    prices: &[f64],
    status: SolveStatus,
    tol: f64,
) -> PricingSolution {
    PricingSolution {
        prices: problem
            .segments
            .iter()
            .map(|s| s.id.clone())
            .zip(prices.iter().copied())
            .collect(),
        objective: problem.objective(prices),
        status,
        constraints: problem.constraint_report(prices, tol),
        starts_used: 0,
        solve_ms: 0,
        metadata: SolveMetadata::default(),
    }
}

/// Conservative default: the margin floor, raised to `p_lo`, capped at `p_hi`.
pub fn fallback(problem: &PricingProblem) -> PricingSolution {
    let tol = SolverConfig::default().constraint_tol;
    let prices: Vec<f64> = problem
        .segments
        .iter()
        .map(|s| {
            (s.unit_cost + problem.margin_min)
                .max(s.price_lo)
                .min(s.price_hi)
        })
        .collect();
    let mut sol = assemble(problem, &prices, SolveStatus::Fallback, tol);
    sol.metadata.notes = sol
        .violations(tol)
        .map(|c| format!("violated {}", c.name))
        .collect();
    sol
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub n_starts: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub max_outer_iter: usize,
    pub max_inner_iter: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub seed: u64,
    /// Fill `solve_ms`; off by default so output is byte-reproducible.
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_starts: 10,
            grad_tol: 1e-6,
            constraint_tol: 1e-4,
            max_outer_iter: 60,
            max_inner_iter: 2000,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            seed: 0,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_starts >= 1
            && self.grad_tol > 0.0
            && self.constraint_tol > 0.0
            && self.max_outer_iter >= 1
            && self.max_inner_iter >= 1
            && self.penalty_init > 0.0
            && self.penalty_growth > 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "solver needs n_starts >= 1, positive tolerances and penalty_growth > 1",
            ))
        }
    }
}

/// Log-space view of a problem with its per-segment feasible intervals.
struct Workspace<'a> {
    problem: &'a PricingProblem,
    lo: Vec<f64>,
    hi: Vec<f64>,
    pairs: Vec<(usize, usize, f64)>,
    scale: f64,
}

struct RunResult {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a PricingProblem) -> Option<Self> {
        let mut lo = Vec::with_capacity(problem.len());
        let mut hi = Vec::with_capacity(problem.len());
        for s in &problem.segments {
            let (l, h) = s.feasible_interval(problem.margin_min)?;
            lo.push(l.ln());
            hi.push(h.ln());
        }
        let pairs: Vec<_> = problem
            .pairs()
            .into_iter()
            .map(|(i, j, d)| (i, j, d.ln()))
            .collect();
        // Difference constraints with disjoint boxes cannot be met.
        if pairs.iter().any(|&(i, j, d)| lo[i] - hi[j] > d) {
            return None;
        }
        let mid: f64 = problem
            .segments
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(s, (l, h))| segment_profit(0.5 * (l + h), s)[0])
            .sum();
        Some(Workspace {
            problem,
            lo,
            hi,
            pairs,
            scale: mid.abs().max(1.0),
        })
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*l, *h);
        }
    }

    /// Augmented Lagrangian value of the scaled, negated objective.
    fn merit(&self, x: &[f64], lam: &[f64], rho: f64) -> f64 {
        let f: f64 = self
            .problem
            .segments
            .iter()
            .zip(x)
            .map(|(s, &v)| segment_profit(v, s)[0])
            .sum();
        let pen: f64 = self
            .pairs
            .iter()
            .zip(lam)
            .map(|(&(i, j, d), &l)| {
                let t = (x[i] - x[j] - d + l / rho).max(0.0);
                0.5 * rho * t * t
            })
            .sum();
        -f / self.scale + pen
    }

    fn derivatives(&self, x: &[f64], lam: &[f64], rho: f64) -> (Vec<f64>, Vec<f64>) {
        let (mut g, mut h): (Vec<f64>, Vec<f64>) = self
            .problem
            .segments
            .iter()
            .zip(x)
            .map(|(s, &v)| {
                let [_, f1, f2] = segment_profit(v, s);
                (-f1 / self.scale, -f2 / self.scale)
            })
            .unzip();
        for (&(i, j, d), &l) in self.pairs.iter().zip(lam) {
            let t = rho * (x[i] - x[j] - d + l / rho).max(0.0);
            if t > 0.0 {
                g[i] += t;
                g[j] -= t;
                h[i] += rho;
                h[j] += rho;
            }
        }
        (g, h)
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .zip(self.lo.iter().zip(&self.hi))
            .map(|((&v, &gi), (&l, &h))| (v - (v - gi).clamp(l, h)).abs())
            .fold(0.0, f64::max)
    }

    /// Projected diagonal-Newton descent on the merit function.
    fn inner(&self, x: &mut Vec<f64>, lam: &[f64], rho: f64, cfg: &SolverConfig) -> (usize, bool) {
        let mut fx = self.merit(x, lam, rho);
        for it in 0..cfg.max_inner_iter {
            let (g, h) = self.derivatives(x, lam, rho);
            if self.projected_gradient_norm(x, &g) <= cfg.grad_tol {
                return (it, true);
            }
            let d: Vec<f64> = g
                .iter()
                .zip(&h)
                .map(|(gi, hi)| (-gi / hi.abs().max(1e-8)).clamp(-1.0, 1.0))
                .collect();
            let mut t = 1.0;
            loop {
                let mut xn: Vec<f64> = x.iter().zip(&d).map(|(v, di)| v + t * di).collect();
                self.project(&mut xn);
                let decrease: f64 = g
                    .iter()
                    .zip(xn.iter().zip(x.iter()))
                    .map(|(gi, (a, b))| gi * (a - b))
                    .sum();
                let fn_ = self.merit(&xn, lam, rho);
                if fn_ <= fx + 1e-4 * decrease {
                    if xn == *x {
                        return (it, false);
                    }
                    *x = xn;
                    fx = fn_;
                    break;
                }
                t *= 0.5;
                if t < 1e-14 {
                    return (it, false);
                }
            }
        }
        (cfg.max_inner_iter, false)
    }

    fn max_violation(&self, x: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j, d)| (x[i] - x[j] - d).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Multipliers that best satisfy stationarity at `x`, by nonnegative
    /// least squares over the coordinates strictly inside their intervals.
    fn estimate_multipliers(&self, x: &[f64], tol: f64) -> Vec<f64> {
        let free: Vec<bool> = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| v > l && v < h)
            .collect();
        let mut resid: Vec<f64> = self
            .problem
            .segments
            .iter()
            .zip(x)
            .zip(&free)
            .map(|((s, &v), &f)| {
                if f {
                    -segment_profit(v, s)[1] / self.scale
                } else {
                    0.0
                }
            })
            .collect();
        let active: Vec<bool> = self
            .pairs
            .iter()
            .map(|&(i, j, d)| (x[i] - x[j] - d).abs() <= tol)
            .collect();
        let mut lam = vec![0.0; self.pairs.len()];
        for _ in 0..200 {
            for (k, &(i, j, _)) in self.pairs.iter().enumerate() {
                let norm = f64::from(u8::from(free[i])) + f64::from(u8::from(free[j]));
                if !active[k] || norm == 0.0 {
                    continue;
                }
                let dot =
                    if free[i] { resid[i] } else { 0.0 } - if free[j] { resid[j] } else { 0.0 };
                let new = (lam[k] - dot / norm).max(0.0);
                let step = new - lam[k];
                if free[i] {
                    resid[i] += step;
                }
                if free[j] {
                    resid[j] -= step;
                }
                lam[k] = new;
            }
        }
        lam
    }

    fn run(&self, mut x: Vec<f64>, warm: bool, cfg: &SolverConfig) -> RunResult {
        self.project(&mut x);
        let feas_tol = 1e-2 * cfg.constraint_tol;
        let mut lam = if warm {
            self.estimate_multipliers(&x, cfg.constraint_tol)
        } else {
            vec![0.0; self.pairs.len()]
        };
        let mut rho = cfg.penalty_init;
        let mut prev = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        for _ in 0..cfg.max_outer_iter {
            let (it, ok) = self.inner(&mut x, &lam, rho, cfg);
            iterations += it;
            // Feasibility and complementarity together: inactive caps must
            // carry no multiplier before the point counts as stationary.
            let viol = self
                .pairs
                .iter()
                .zip(&lam)
                .map(|(&(i, j, d), &l)| (x[i] - x[j] - d).max(-l / rho).abs())
                .fold(0.0, f64::max);
            converged = ok && viol <= feas_tol;
            if viol <= feas_tol {
                break;
            }
            for (l, &(i, j, d)) in lam.iter_mut().zip(&self.pairs) {
                *l = (*l + rho * (x[i] - x[j] - d)).max(0.0);
            }
            if self.max_violation(&x) > 0.25 * prev {
                rho = (rho * cfg.penalty_growth).min(1e12);
            }
            prev = self.max_violation(&x);
        }
        RunResult {
            x,
            iterations,
            converged,
        }
    }

    fn random_start(&self, seed: u64, index: usize) -> Vec<f64> {
        let mut rng = stream(seed, "multistart", index as u64);
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + rng.random::<f64>() * (h - l))
            .collect()
    }

    /// Prices from log coordinates, snapping to exact interval ends.
    fn prices(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .zip(&self.problem.segments)
            .map(|((&v, (&l, &h)), s)| {
                let edge = |e: f64| {
                    s.feasible_interval(self.problem.margin_min)
                        .map(|(a, b)| if e == l { a } else { b })
                };
                if v == l || v == h {
                    edge(v).unwrap_or(v.exp())
                } else {
                    v.exp()
                }
            })
            .collect()
    }
}

/// Best local optimum over `cfg.n_starts` random starts plus an optional warm
/// start. Falls back to [`fallback`] when no start ends feasible.
pub fn solve(
    problem: &PricingProblem,
    cfg: &SolverConfig,
    warm_start: Option<&BTreeMap<String, f64>>,
) -> Result<PricingSolution> {
    cfg.validate()?;
    problem.validate()?;
    let clock = Instant::now();
    let mut sol = solve_inner(problem, cfg, warm_start);
    if cfg.record_timing {
        sol.solve_ms = clock.elapsed().as_millis() as u64;
    }
    Ok(sol)
}

fn solve_inner(
    problem: &PricingProblem,
    cfg: &SolverConfig,
    warm_start: Option<&BTreeMap<String, f64>>,
) -> PricingSolution {
    let Some(ws) = Workspace::new(problem) else {
        let mut sol = fallback(problem);
        sol.metadata
            .notes
            .insert(0, "guardrails admit no feasible price".into());
        return sol;
    };
    let tol = cfg.constraint_tol;
    let warm: Option<Vec<f64>> = warm_start.map(|w| {
        problem
            .segments
            .iter()
            .zip(ws.lo.iter().zip(&ws.hi))
            .map(|(s, (l, h))| {
                w.get(&s.id)
                    .filter(|p| **p > 0.0)
                    .map_or(0.5 * (l + h), |p| p.ln())
            })
            .collect()
    });

    // Candidate 0 is the warm start when present; random starts follow.
    let mut best: Option<(f64, Vec<f64>, bool, Option<usize>)> = None;
    let mut metadata = SolveMetadata::default();
    let candidates = warm
        .into_iter()
        .map(|x| (None, x))
        .chain((0..cfg.n_starts).map(|k| (Some(k), ws.random_start(cfg.seed, k))));
    for (index, x0) in candidates {
        let run = ws.run(x0, index.is_none(), cfg);
        match index {
            None => metadata.warm_start_iterations = Some(run.iterations),
            Some(_) => metadata.start_iterations.push(run.iterations),
        }
        let prices = ws.prices(&run.x);
        let feasible = problem
            .constraint_report(&prices, tol)
            .iter()
            .all(|c| !c.violated(tol));
        if !feasible {
            continue;
        }
        let obj = problem.objective(&prices);
        if best.as_ref().is_none_or(|b| obj > b.0) {
            best = Some((obj, prices, run.converged, index));
        }
    }
    match best {
        Some((_, prices, converged, index)) => {
            let status = if converged {
                SolveStatus::Optimal
            } else {
                SolveStatus::FeasibleSuboptimal
            };
            let mut sol = assemble(problem, &prices, status, tol);
            metadata.best_start = index;
            sol.metadata = metadata;
            sol.starts_used = cfg.n_starts;
            sol
        }
        None => {
            let mut sol = fallback(problem);
            sol.metadata
                .notes
                .insert(0, "no start reached a feasible point".into());
            sol.metadata.start_iterations = metadata.start_iterations;
            sol.starts_used = cfg.n_starts;
            sol
        }
    }
}

/// Solves each tier separately and reconciles the combined prices.
///
/// Fairness caps that cross tiers force a joint solve, recorded in the
/// solution metadata.
pub fn solve_decomposed(problem: &PricingProblem, cfg: &SolverConfig) -> Result<PricingSolution> {
    cfg.validate()?;
    problem.validate()?;
    let tier_of: BTreeMap<&str, &str> = problem
        .segments
        .iter()
        .map(|s| (s.id.as_str(), s.tier.as_deref().unwrap_or("")))
        .collect();
    if let Some(f) = problem
        .fairness
        .iter()
        .find(|f| tier_of[f.i.as_str()] != tier_of[f.j.as_str()])
    {
        let mut sol = solve(problem, cfg, None)?;
        sol.metadata.decomposition = Some("joint".into());
        sol.metadata.notes.push(format!(
            "cross-tier constraint {}/{}: solved jointly",
            f.i, f.j
        ));
        return Ok(sol);
    }
    let mut tiers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for s in &problem.segments {
        tiers.entry(tier_of[s.id.as_str()]).or_default().push(&s.id);
    }
    if tiers.len() <= 1 {
        return solve(problem, cfg, None);
    }
    let clock = Instant::now();
    let mut prices = BTreeMap::new();
    let mut status = SolveStatus::Optimal;
    let mut metadata = SolveMetadata {
        decomposition: Some("per_tier".into()),
        ..Default::default()
    };
    for (tier, ids) in &tiers {
        let sub = solve(&problem.subproblem(ids), cfg, None)?;
        status = status.max(sub.status);
        prices.extend(sub.prices);
        metadata
            .notes
            .push(format!("tier `{tier}`: {:?}", sub.status));
        if metadata.start_iterations.is_empty() {
            metadata.start_iterations = sub.metadata.start_iterations;
        } else {
            for (a, b) in metadata
                .start_iterations
                .iter_mut()
                .zip(sub.metadata.start_iterations)
            {
                *a += b;
            }
        }
    }
    let vec: Vec<f64> = problem.segments.iter().map(|s| prices[&s.id]).collect();
    let mut sol = assemble(problem, &vec, status, cfg.constraint_tol);
    if status != SolveStatus::Fallback && sol.violations(cfg.constraint_tol).next().is_some() {
        sol = fallback(problem);
        sol.metadata
            .notes
            .push("reconciliation found violated constraints".into());
    } else {
        sol.metadata = metadata;
    }
    sol.starts_used = cfg.n_starts;
    if cfg.record_timing {
        sol.solve_ms = clock.elapsed().as_millis() as u64;
    }
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Best feasible grid point; `None` when no grid point is feasible.
    pub best: Option<PricingSolution>,
    pub evaluated: usize,
    pub feasible: usize,
    /// Grid spacing per segment.
    pub steps: Vec<f64>,
}

/// Exhaustive search over an evenly spaced grid on each price box.
/// Constraints are checked exactly, with no tolerance.
pub fn grid_oracle(problem: &PricingProblem, grid_points_per_dim: usize) -> Result<GridResult> {
    problem.validate()?;
    let n = problem.len();
    if n > 3 {
        return Err(Error::TooManyDimensions(n));
    }
    if grid_points_per_dim < 2 {
        return Err(Error::config("grid needs at least 2 points per dimension"));
    }
    let g = grid_points_per_dim;
    let axes: Vec<Vec<f64>> = problem
        .segments
        .iter()
        .map(|s| {
            (0..g)
                .map(|k| s.price_lo + (s.price_hi - s.price_lo) * k as f64 / (g - 1) as f64)
                .collect()
        })
        .collect();
    // Per-axis profit and own-constraint feasibility are cached.
    let own: Vec<Vec<Option<f64>>> = problem
        .segments
        .iter()
        .zip(&axes)
        .map(|(s, axis)| {
            axis.iter()
                .map(|&p| {
                    let ok = p - s.unit_cost >= problem.margin_min
                        && (s.churn_max >= 1.0 || s.churn(p) <= s.churn_max)
                        && (s.volume_min <= 0.0 || s.demand(p) >= s.volume_min);
                    ok.then(|| s.profit(p))
                })
                .collect()
        })
        .collect();
    let pairs = problem.pairs();
    let total = g.pow(n as u32);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible = 0;
    let mut idx = vec![0usize; n];
    let mut prices = vec![0.0; n];
    for _ in 0..total {
        let mut obj = Some(0.0);
        for d in 0..n {
            prices[d] = axes[d][idx[d]];
            obj = obj.zip(own[d][idx[d]]).map(|(a, b)| a + b);
        }
        if let Some(obj) = obj {
            if pairs
                .iter()
                .all(|&(i, j, delta)| prices[i] / prices[j] <= delta)
            {
                feasible += 1;
                if best.as_ref().is_none_or(|b| obj > b.0) {
                    best = Some((obj, prices.clone()));
                }
            }
        }
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < g {
                break;
            }
            idx[d] = 0;
        }
    }
    let tol = SolverConfig::default().constraint_tol;
    Ok(GridResult {
        best: best.map(|(_, p)| assemble(problem, &p, SolveStatus::Optimal, tol)),
        evaluated: total,
        feasible,
        steps: problem
            .segments
            .iter()
            .map(|s| (s.price_hi - s.price_lo) / (g - 1) as f64)
            .collect(),
    })
}
