//! Additive demand decomposition `D = T + S + C + ε` with bootstrap
//! prediction intervals.
//!
//! * `T`: damped Holt smoothing of the Fourier-deseasonalized series
//!   (one-step-ahead fitted values) plus a constant bias correction.
//! * `S`: least-squares Fourier regression with `K` harmonic pairs on `D - T`.
//! * `C`: gradient-boosted trees on the covariates, fitted to `D - T - S`.
//! * `ε`: whatever remains, so the reconstruction is exact.

pub mod gbdt;
pub mod metrics;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use gbdt::{Gbdt, GbdtConfig};
pub use metrics::{evaluate_forecast, ForecastMetrics};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::panel::SegmentSeries;
use crate::rng::stream;
use crate::stats::{mean, quantile_sorted};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub seasonal_period: usize,
    pub fourier_order: usize,
    /// Trend damping factor `φ`.
    pub damping: f64,
    pub gbdt: GbdtConfig,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            seasonal_period: 12,
            fourier_order: 3,
            damping: 0.98,
            gbdt: GbdtConfig::default(),
            seed: 0,
        }
    }
}

const SMOOTHING_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const OOF_FOLDS: usize = 5;

// ---------------------------------------------------------------------------
// Fourier terms
// ---------------------------------------------------------------------------

/// Harmonic pairs `(cos, sin)` for `k = 1..=order`, skipping columns that
/// vanish at integer periods (the `sin` of the Nyquist harmonic).
fn fourier_row(period: f64, seasonal_period: usize, order: usize) -> Vec<f64> {
    let p = seasonal_period as f64;
    let mut row = Vec::with_capacity(2 * order);
    for k in 1..=order {
        let w = 2.0 * PI * k as f64 * period / p;
        row.push(w.cos());
        if 2 * k != seasonal_period {
            row.push(w.sin());
        }
    }
    row
}

fn effective_order(seasonal_period: usize, order: usize) -> usize {
    order.min(seasonal_period / 2)
}

// ---------------------------------------------------------------------------
// Damped Holt smoothing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltState {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub level: f64,
    pub slope: f64,
}

impl HoltState {
    /// Point forecast `h >= 1` steps past the state.
    pub fn forecast(&self, h: usize) -> f64 {
        let damp: f64 = (1..=h).map(|i| self.phi.powi(i as i32)).sum();
        self.level + damp * self.slope
    }

    fn step(&mut self, innovation: f64) -> f64 {
        let pred = self.level + self.phi * self.slope;
        self.level = pred + self.alpha * innovation;
        self.slope = self.phi * self.slope + self.alpha * self.beta * innovation;
        pred
    }
}

/// Runs the smoother and returns one-step-ahead fits (the first is the
/// initial level), the final state and the one-step SSE.
fn holt_run(
    x: &[f64],
    alpha: f64,
    beta: f64,
    phi: f64,
    season: usize,
) -> (Vec<f64>, HoltState, f64) {
    let m = season.min(x.len() / 2).max(1);
    let slope0 = if x.len() >= 2 * m {
        (mean(&x[m..2 * m]) - mean(&x[..m])) / m as f64
    } else {
        0.0
    };
    let mut st = HoltState {
        alpha,
        beta,
        phi,
        level: x[0],
        slope: slope0,
    };
    let mut fitted = Vec::with_capacity(x.len());
    fitted.push(x[0]);
    let mut sse = 0.0;
    for &obs in &x[1..] {
        let pred = st.level + phi * st.slope;
        let e = obs - pred;
        st.step(e);
        fitted.push(pred);
        sse += e * e;
    }
    (fitted, st, sse)
}

/// Grid search over `(α, β)` minimizing the one-step SSE.
pub fn fit_holt(x: &[f64], phi: f64, season: usize) -> (Vec<f64>, HoltState) {
    let mut best: Option<(f64, Vec<f64>, HoltState)> = None;
    for &a in &SMOOTHING_GRID {
        for &b in &SMOOTHING_GRID {
            let (fitted, st, sse) = holt_run(x, a, b, phi, season);
            if best.as_ref().is_none_or(|(s, _, _)| sse < *s) {
                best = Some((sse, fitted, st));
            }
        }
    }
    let (_, fitted, st) = best.expect("non-empty grid");
    (fitted, st)
}

// ---------------------------------------------------------------------------
// Demand model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDecomposition {
    pub periods: Vec<i64>,
    pub observed: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub covariate_effect: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ForecastDecomposition {
    /// Largest `|T + S + C + ε - D|` relative to `max(1, |D|)`.
    pub fn reconstruction_error(&self) -> f64 {
        (0..self.observed.len())
            .map(|i| {
                let r =
                    self.trend[i] + self.seasonal[i] + self.covariate_effect[i] + self.residuals[i];
                (r - self.observed[i]).abs() / self.observed[i].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub config: ForecastConfig,
    pub holt: HoltState,
    pub trend_offset: f64,
    /// Coefficients of [`fourier_row`] columns.
    pub seasonal_coef: Vec<f64>,
    pub covariate_names: Vec<String>,
    pub gbdt: Option<Gbdt>,
    /// Centered, degrees-of-freedom-inflated residuals for the bootstrap.
    pub residual_pool: Vec<f64>,
    pub last_period: i64,
    pub decomposition: ForecastDecomposition,
}

impl DemandModel {
    fn order(&self) -> usize {
        effective_order(self.config.seasonal_period, self.config.fourier_order)
    }

    pub fn seasonal_at(&self, period: i64) -> f64 {
        fourier_row(period as f64, self.config.seasonal_period, self.order())
            .iter()
            .zip(&self.seasonal_coef)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn covariate_effect(&self, x: &[f64]) -> f64 {
        self.gbdt.as_ref().map_or(0.0, |g| g.predict(x))
    }

    fn check_future(&self, horizon: usize, future: &[Vec<f64>]) -> Result<()> {
        if horizon == 0 {
            return Err(Error::config("forecast horizon must be positive"));
        }
        let k = self.covariate_names.len();
        if future.len() != horizon && !(k == 0 && future.is_empty()) {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                got: future.len(),
            });
        }
        if future.iter().any(|r| r.len() != k) {
            return Err(Error::LengthMismatch(format!(
                "future covariate rows must have {k} values"
            )));
        }
        Ok(())
    }

    fn deterministic_part(&self, h: usize, future: &[Vec<f64>]) -> f64 {
        let t = self.last_period + h as i64;
        let c = future.get(h - 1).map_or(0.0, |x| self.covariate_effect(x));
        self.trend_offset + self.seasonal_at(t) + c
    }

    /// Point forecast `T + S + C` for periods `1..=horizon` past the training data.
    pub fn predict_mean(&self, horizon: usize, covariate_future: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_future(horizon, covariate_future)?;
        Ok((1..=horizon)
            .map(|h| self.holt.forecast(h) + self.deterministic_part(h, covariate_future))
            .collect())
    }
}

fn design_checks(series: &SegmentSeries, cfg: &ForecastConfig) -> Result<()> {
    if cfg.seasonal_period < 2
        || cfg.fourier_order == 0
        || !(cfg.damping > 0.0 && cfg.damping <= 1.0)
    {
        return Err(Error::config(
            "forecast needs seasonal_period >= 2, fourier_order >= 1, damping in (0, 1]",
        ));
    }
    cfg.gbdt.validate()?;
    let needed = 2 * cfg.seasonal_period;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    if series.points.iter().any(|p| !p.quantity.is_finite()) {
        return Err(Error::InvalidRecord("non-finite demand".into()));
    }
    Ok(())
}

/// Fits the decomposition to one segment's quantity series.
pub fn fit_demand_model(series: &SegmentSeries, cfg: &ForecastConfig) -> Result<DemandModel> {
    design_checks(series, cfg)?;
    let d = series.quantities();
    let periods: Vec<i64> = series.points.iter().map(|p| p.period).collect();
    let n = d.len();
    let order = effective_order(cfg.seasonal_period, cfg.fourier_order);
    let four: Vec<Vec<f64>> = periods
        .iter()
        .map(|&t| fourier_row(t as f64, cfg.seasonal_period, order))
        .collect();
    let n_four = four[0].len();

    // Deseasonalize with a linear-trend-plus-harmonics regression.
    let t_mean = periods.iter().sum::<i64>() as f64 / n as f64;
    let rows: Vec<Vec<f64>> = periods
        .iter()
        .zip(&four)
        .map(|(&t, f)| {
            let mut r = vec![1.0, t as f64 - t_mean];
            r.extend_from_slice(f);
            r
        })
        .collect();
    let coef0 = least_squares(&rows, &d, 1e-9)?;
    let deseason: Vec<f64> = d
        .iter()
        .zip(&four)
        .map(|(y, f)| y - f.iter().zip(&coef0[2..]).map(|(a, b)| a * b).sum::<f64>())
        .collect();

    let (holt_fit, holt) = fit_holt(&deseason, cfg.damping, cfg.seasonal_period);

    // Seasonal regression on the detrended series; its intercept becomes a trend offset.
    let detrended: Vec<f64> = d.iter().zip(&holt_fit).map(|(a, b)| a - b).collect();
    let rows: Vec<Vec<f64>> = four
        .iter()
        .map(|f| {
            let mut r = vec![1.0];
            r.extend_from_slice(f);
            r
        })
        .collect();
    let coef = least_squares(&rows, &detrended, 1e-9)?;
    let trend_offset = coef[0];
    let seasonal_coef = coef[1..].to_vec();
    let trend: Vec<f64> = holt_fit.iter().map(|t| t + trend_offset).collect();
    let seasonal: Vec<f64> = four
        .iter()
        .map(|f| f.iter().zip(&seasonal_coef).map(|(a, b)| a * b).sum())
        .collect();

    let target: Vec<f64> = (0..n).map(|i| d[i] - trend[i] - seasonal[i]).collect();
    let x = series.covariate_rows();
    let has_cov = !series.covariate_names.is_empty();
    let (gbdt, covariate_effect, pool_source) = if has_cov {
        let g = Gbdt::fit(&x, &target, &cfg.gbdt, cfg.seed)?;
        let c: Vec<f64> = x.iter().map(|r| g.predict(r)).collect();
        let oof = out_of_fold_residuals(&x, &target, cfg)?;
        (Some(g), c, oof)
    } else {
        (None, vec![0.0; n], target.clone())
    };
    let residuals: Vec<f64> = (0..n)
        .map(|i| d[i] - trend[i] - seasonal[i] - covariate_effect[i])
        .collect();

    // The first season carries the smoother's start-up transient.
    let tail = &pool_source[cfg.seasonal_period.min(n - 1)..];
    let centre = mean(tail);
    // Fourier coefficients, trend offset, initial level and slope, α and β.
    let n_params = n_four + 5;
    let inflate = (tail.len() as f64 / (tail.len() as f64 - n_params as f64).max(1.0)).sqrt();
    let residual_pool: Vec<f64> = tail.iter().map(|r| (r - centre) * inflate).collect();

    Ok(DemandModel {
        config: cfg.clone(),
        holt,
        trend_offset,
        seasonal_coef,
        covariate_names: series.covariate_names.clone(),
        gbdt,
        residual_pool,
        last_period: *periods.last().expect("non-empty"),
        decomposition: ForecastDecomposition {
            periods,
            observed: d,
            trend,
            seasonal,
            covariate_effect,
            residuals,
        },
    })
}

/// Residuals of boosted fits on contiguous folds, each predicted by a model
/// that never saw it.
fn out_of_fold_residuals(x: &[Vec<f64>], y: &[f64], cfg: &ForecastConfig) -> Result<Vec<f64>> {
    let n = y.len();
    let folds = OOF_FOLDS.min(n);
    let mut out = vec![0.0; n];
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        let train: Vec<usize> = (0..n).filter(|i| *i < lo || *i >= hi).collect();
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let g = Gbdt::fit(&xt, &yt, &cfg.gbdt, cfg.seed.wrapping_add(f as u64 + 1))?;
        for i in lo..hi {
            out[i] = y[i] - g.predict(&x[i]);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Probabilistic forecasts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticForecast {
    pub horizon: usize,
    pub periods: Vec<i64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_draws: usize,
    pub level: f64,
}

/// Point forecast plus central `level` intervals from `n_draws` bootstrap
/// paths. Each path re-runs the smoother with resampled residuals as
/// innovations. Bounds are widened, if needed, to contain the mean.
pub fn predict_with_intervals(
    model: &DemandModel,
    horizon: usize,
    covariate_future: &[Vec<f64>],
    n_draws: usize,
    level: f64,
    seed: u64,
) -> Result<ProbabilisticForecast> {
    let mean = model.predict_mean(horizon, covariate_future)?;
    if n_draws == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::config("need n_draws >= 1 and level in (0, 1)"));
    }
    let base: Vec<f64> = (1..=horizon)
        .map(|h| model.deterministic_part(h, covariate_future))
        .collect();
    let pool = &model.residual_pool;
    let mut rng = stream(seed, "forecast-bootstrap", 0);
    let mut draws = vec![Vec::with_capacity(n_draws); horizon];
    for _ in 0..n_draws {
        let mut st = model.holt;
        for h in 0..horizon {
            let e = if pool.is_empty() {
                0.0
            } else {
                pool[rng.random_range(0..pool.len())]
            };
            let t = st.step(e);
            draws[h].push(t + base[h] + e);
        }
    }
    let (lo_q, hi_q) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    for (h, mut d) in draws.into_iter().enumerate() {
        d.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&d, lo_q).min(mean[h]));
        upper.push(quantile_sorted(&d, hi_q).max(mean[h]));
    }
    Ok(ProbabilisticForecast {
        horizon,
        periods: (1..=horizon as i64)
            .map(|h| model.last_period + h)
            .collect(),
        mean,
        lower,
        upper,
        n_draws,
        level,
    })
}

/// Report layout for one segment's forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub segment: String,
    pub horizon: usize,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub metrics: Option<ForecastMetrics>,
}

impl ForecastReport {
    pub fn new(segment: &str, fc: &ProbabilisticForecast, actual: Option<&[f64]>) -> Result<Self> {
        let metrics = actual
            .map(|a| evaluate_forecast(&fc.mean, &fc.lower, &fc.upper, a))
            .transpose()?;
        Ok(ForecastReport {
            segment: segment.to_string(),
            horizon: fc.horizon,
            mean: fc.mean.clone(),
            lower: fc.lower.clone(),
            upper: fc.upper.clone(),
            level: fc.level,
            metrics,
        })
    }
}
