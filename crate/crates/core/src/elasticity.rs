//! Hierarchical log-log demand model fitted by Gibbs sampling.
//!
//! For segment `s` and period `t`:
//!
//! ```text
//! log Q = α_s + β_s·log P + γ_sᵀz + (Fourier seasonal controls) + η,   η ~ N(0, σ²)
//! β_s ~ N(μ_β, σ²_β),   μ_β ~ N(m0, s0²),   σ²_β ~ IG(a_β, b_β),   σ² ~ IG(a_η, b_η)
//! ```
//!
//! with independent Normal priors on `α_s` and on `γ_s` (and the seasonal
//! controls). Every full conditional is conjugate: each segment's
//! coefficient block is multivariate Normal, `μ_β` is Normal and both
//! variances are inverse-gamma.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::num::Real;
use crate::panel::{aggregate_segment, SubscriptionPanel};
use crate::rng::{stream, StreamRng};
use crate::stats::{correlation, mean, split_rhat, variance, Summary};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Hyperparameters. Inverse-gamma priors `IG(shape, scale)` have density
/// proportional to `x^(-shape-1)·exp(-scale/x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticityPriors {
    pub mu_beta_mean: f64,
    pub mu_beta_sd: f64,
    pub sigma_beta_shape: f64,
    pub sigma_beta_scale: f64,
    pub noise_shape: f64,
    pub noise_scale: f64,
    pub alpha_sd: f64,
    pub gamma_sd: f64,
}

impl Default for ElasticityPriors {
    fn default() -> Self {
        ElasticityPriors {
            mu_beta_mean: -1.0,
            mu_beta_sd: 2.0,
            sigma_beta_shape: 2.0,
            sigma_beta_scale: 0.1,
            noise_shape: 2.0,
            noise_scale: 0.005,
            alpha_sd: 100.0,
            gamma_sd: 10.0,
        }
    }
}

impl ElasticityPriors {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.mu_beta_sd,
            self.sigma_beta_shape,
            self.sigma_beta_scale,
            self.noise_shape,
            self.noise_scale,
            self.alpha_sd,
            self.gamma_sd,
        ];
        if positive.iter().all(|v| *v > 0.0 && v.is_finite()) && self.mu_beta_mean.is_finite() {
            Ok(())
        } else {
            Err(Error::config(
                "elasticity prior scales must be positive and finite",
            ))
        }
    }

    /// Priors for the next refit, centred on the current posterior: `μ_β`
    /// keeps its posterior mean with twice its posterior sd, and the two
    /// variances get inverse-gamma priors matching their posterior means
    /// with a few pseudo-observations.
    pub fn informed(&self, post: &ElasticityPosterior) -> Self {
        let mu = post.kept(&post.mu_beta);
        let s2b = post.kept(&post.sigma2_beta);
        let s2 = post.kept(&post.sigma2);
        let shape = 5.0;
        ElasticityPriors {
            mu_beta_mean: mean(&mu),
            mu_beta_sd: (2.0 * variance(&mu).sqrt()).max(1e-3),
            sigma_beta_shape: shape,
            sigma_beta_scale: (shape - 1.0) * mean(&s2b),
            noise_shape: shape,
            noise_scale: (shape - 1.0) * mean(&s2),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticityConfig {
    /// Iterations per chain, burn-in included.
    pub n_draws: usize,
    pub n_burnin: usize,
    pub n_chains: usize,
    pub seasonal_period: usize,
    /// Harmonic pairs used as seasonal controls; 0 disables them.
    pub fourier_order: usize,
    /// Covariates entering the design; `None` takes every numeric covariate.
    pub covariates: Option<Vec<String>>,
    pub seed: u64,
}

impl Default for ElasticityConfig {
    fn default() -> Self {
        ElasticityConfig {
            n_draws: 4000,
            n_burnin: 1000,
            n_chains: 2,
            seasonal_period: 12,
            fourier_order: 2,
            covariates: None,
            seed: 0,
        }
    }
}

impl ElasticityConfig {
    fn validate(&self) -> Result<()> {
        if self.n_draws <= self.n_burnin || self.n_chains == 0 || self.seasonal_period < 2 {
            return Err(Error::config(
                "elasticity sampler needs n_draws > n_burnin, n_chains >= 1, seasonal_period >= 2",
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Posterior
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPosterior {
    pub segment: String,
    pub n_obs: usize,
    /// Draws in chain-major order, burn-in included.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `gamma[k]` holds the draws of covariate `k`.
    pub gamma: Vec<Vec<f64>>,
    /// Segment means of the design covariates.
    pub covariate_means: Vec<f64>,
    pub rhat_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rhat_mu_beta: f64,
    pub max_rhat_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityPosterior {
    pub segments: Vec<SegmentPosterior>,
    pub covariate_names: Vec<String>,
    pub mu_beta: Vec<f64>,
    pub sigma2_beta: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub n_draws: usize,
    pub n_burnin: usize,
    pub n_chains: usize,
    pub diagnostics: Diagnostics,
}

impl ElasticityPosterior {
    /// Post-burn-in draws of a chain-major trace.
    pub fn kept(&self, trace: &[f64]) -> Vec<f64> {
        trace
            .iter()
            .enumerate()
            .filter(|(i, _)| i % self.n_draws >= self.n_burnin)
            .map(|(_, v)| *v)
            .collect()
    }

    fn chains<'a>(&self, trace: &'a [f64]) -> Vec<&'a [f64]> {
        trace
            .chunks(self.n_draws)
            .map(|c| &c[self.n_burnin.min(c.len())..])
            .collect()
    }

    pub fn segment(&self, id: &str) -> Result<&SegmentPosterior> {
        self.segments
            .iter()
            .find(|s| s.segment == id)
            .ok_or_else(|| Error::UnknownSegment(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    pub rhat_beta: f64,
}

/// Posterior summary of one segment (95% central intervals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityEstimate {
    pub segment: String,
    pub beta: Summary,
    pub alpha: Summary,
    pub gamma: BTreeMap<String, Summary>,
    /// Covariate names in design order, with their segment means.
    pub covariates: Vec<(String, f64)>,
    pub diagnostics: EstimateDiagnostics,
}

impl ElasticityEstimate {
    /// `log A_s = α_s + γ_sᵀz` at the posterior means.
    pub fn log_scale(&self, z: &[f64]) -> f64 {
        self.alpha.mean
            + self
                .covariates
                .iter()
                .zip(z)
                .map(|((n, _), x)| self.gamma[n].mean * x)
                .sum::<f64>()
    }

    pub fn reference_covariates(&self) -> Vec<f64> {
        self.covariates.iter().map(|(_, m)| *m).collect()
    }
}

pub fn posterior_summary(post: &ElasticityPosterior, segment: &str) -> Result<ElasticityEstimate> {
    let s = post.segment(segment)?;
    let level = 0.95;
    Ok(ElasticityEstimate {
        segment: s.segment.clone(),
        beta: Summary::of(&post.kept(&s.beta), level),
        alpha: Summary::of(&post.kept(&s.alpha), level),
        gamma: post
            .covariate_names
            .iter()
            .zip(&s.gamma)
            .map(|(n, d)| (n.clone(), Summary::of(&post.kept(d), level)))
            .collect(),
        covariates: post
            .covariate_names
            .iter()
            .cloned()
            .zip(s.covariate_means.iter().copied())
            .collect(),
        diagnostics: EstimateDiagnostics {
            rhat_beta: s.rhat_beta,
        },
    })
}

pub fn summarize_all(post: &ElasticityPosterior) -> Vec<ElasticityEstimate> {
    post.segments
        .iter()
        .map(|s| posterior_summary(post, &s.segment).expect("segment from posterior"))
        .collect()
}

/// Normal-normal posterior mean of a segment elasticity with the
/// hyperparameters held fixed: a precision-weighted average of the OLS
/// estimate (precision `n_s/σ²`) and the population mean (precision `1/σ²_β`).
pub fn shrinkage_oracle<T: Real>(beta_hat: T, n_s: T, sigma2: T, mu: T, sigma2_beta: T) -> T {
    let w_data = n_s / sigma2;
    let w_prior = T::one() / sigma2_beta;
    (w_data * beta_hat + w_prior * mu) / (w_data + w_prior)
}

// ---------------------------------------------------------------------------
// Sampler
// ---------------------------------------------------------------------------

struct SegmentStats {
    id: String,
    n: usize,
    xtx: SymMatrix,
    xty: Vec<f64>,
    yty: f64,
    init: Vec<f64>,
    covariate_means: Vec<f64>,
}

fn seasonal_controls(period: i64, seasonal_period: usize, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * order);
    for k in 1..=order.min(seasonal_period / 2) {
        let w = 2.0 * PI * k as f64 * period as f64 / seasonal_period as f64;
        out.push(w.cos());
        if 2 * k != seasonal_period {
            out.push(w.sin());
        }
    }
    out
}

fn inv_gamma(rng: &mut StreamRng, shape: f64, scale: f64) -> f64 {
    1.0 / Gamma::new(shape, 1.0 / scale)
        .expect("positive gamma parameters")
        .sample(rng)
}

fn std_normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn quad(m: &SymMatrix, v: &[f64]) -> f64 {
    let n = m.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * m.get(i, j) * v[j];
        }
    }
    s
}

fn build_stats(
    panel: &SubscriptionPanel,
    covariates: &[String],
    cfg: &ElasticityConfig,
) -> Result<Vec<SegmentStats>> {
    let mut out = Vec::new();
    let mut any_variation = false;
    for seg in panel.segments() {
        let series = aggregate_segment(panel, seg, None)?;
        let idx: Vec<usize> = covariates
            .iter()
            .map(|c| {
                series
                    .covariate_names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| {
                        Error::SchemaMismatch(format!("`{c}` is not a numeric covariate"))
                    })
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(series.len());
        let mut y = Vec::with_capacity(series.len());
        for p in &series.points {
            if !(p.price > 0.0) || !(p.quantity > 0.0) {
                return Err(Error::NonPositiveData(format!(
                    "segment `{seg}` period {}",
                    p.period
                )));
            }
            let mut row = vec![1.0, p.price.ln()];
            for (k, &i) in idx.iter().enumerate() {
                let v = p.covariates[i];
                if !v.is_finite() {
                    return Err(Error::InvalidRecord(format!(
                        "segment `{seg}` period {}: missing `{}`",
                        p.period, covariates[k]
                    )));
                }
                row.push(v);
            }
            row.extend(seasonal_controls(
                p.period,
                cfg.seasonal_period,
                cfg.fourier_order,
            ));
            rows.push(row);
            y.push(p.quantity.ln());
        }
        let dim = rows[0].len();
        let logp: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        any_variation |= variance(&logp) > 1e-12;
        let xtx = SymMatrix::gram(&rows, dim);
        let xty = crate::linalg::xty(&rows, &y, dim);
        let mut ridge = xtx.clone();
        for i in 0..dim {
            ridge.add(i, i, 1e-6 * (1.0 + xtx.get(i, i)));
        }
        let init = Cholesky::factor(&ridge)?.solve(&xty);
        let covariate_means = (0..idx.len())
            .map(|k| mean(&rows.iter().map(|r| r[2 + k]).collect::<Vec<_>>()))
            .collect();
        out.push(SegmentStats {
            id: seg.clone(),
            n: rows.len(),
            xtx,
            xty,
            yty: y.iter().map(|v| v * v).sum(),
            init,
            covariate_means,
        });
    }
    if !any_variation {
        return Err(Error::DegenerateDesign(
            "no segment has price variation".into(),
        ));
    }
    Ok(out)
}

struct ChainTrace {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    gamma: Vec<Vec<Vec<f64>>>,
    mu: Vec<f64>,
    s2b: Vec<f64>,
    s2: Vec<f64>,
}

fn run_chain(
    stats: &[SegmentStats],
    n_cov: usize,
    pri: &ElasticityPriors,
    cfg: &ElasticityConfig,
    chain: u64,
) -> Result<ChainTrace> {
    let mut rng = stream(cfg.seed, "gibbs-chain", chain);
    let n_seg = stats.len();
    let dim = stats[0].xty.len();
    let n_total: usize = stats.iter().map(|s| s.n).sum();

    // Overdispersed start around the per-segment least-squares fits.
    let mut theta: Vec<Vec<f64>> = stats.iter().map(|s| s.init.clone()).collect();
    for t in &mut theta {
        t[1] += 0.5 * std_normal(&mut rng);
    }
    let betas: Vec<f64> = theta.iter().map(|t| t[1]).collect();
    let mut mu = mean(&betas);
    let mut s2b = variance(&betas) + 0.05;
    let mut s2 = 0.01;

    let mut tr = ChainTrace {
        alpha: vec![Vec::with_capacity(cfg.n_draws); n_seg],
        beta: vec![Vec::with_capacity(cfg.n_draws); n_seg],
        gamma: vec![vec![Vec::with_capacity(cfg.n_draws); n_cov]; n_seg],
        mu: Vec::with_capacity(cfg.n_draws),
        s2b: Vec::with_capacity(cfg.n_draws),
        s2: Vec::with_capacity(cfg.n_draws),
    };
    let mut prior_prec = vec![1.0 / (pri.gamma_sd * pri.gamma_sd); dim];
    prior_prec[0] = 1.0 / (pri.alpha_sd * pri.alpha_sd);
    let mut z = vec![0.0; dim];

    for _ in 0..cfg.n_draws {
        prior_prec[1] = 1.0 / s2b;
        let mut ssr = 0.0;
        for (s, st) in stats.iter().enumerate() {
            let mut prec = st.xtx.scaled(1.0 / s2);
            for (i, p) in prior_prec.iter().enumerate() {
                prec.add(i, i, *p);
            }
            let mut rhs: Vec<f64> = st.xty.iter().map(|v| v / s2).collect();
            rhs[1] += mu / s2b;
            let chol = Cholesky::factor(&prec)?;
            let m = chol.solve(&rhs);
            z.iter_mut().for_each(|v| *v = std_normal(&mut rng));
            let dev = chol.backward(&z);
            let th: Vec<f64> = m.iter().zip(&dev).map(|(a, b)| a + b).collect();
            let fit = th.iter().zip(&st.xty).map(|(a, b)| a * b).sum::<f64>();
            ssr += (st.yty - 2.0 * fit + quad(&st.xtx, &th)).max(0.0);
            theta[s] = th;
        }
        s2 = inv_gamma(
            &mut rng,
            pri.noise_shape + n_total as f64 / 2.0,
            pri.noise_scale + ssr / 2.0,
        );

        let sum_beta: f64 = theta.iter().map(|t| t[1]).sum();
        let prec_mu = 1.0 / (pri.mu_beta_sd * pri.mu_beta_sd) + n_seg as f64 / s2b;
        let mean_mu =
            (pri.mu_beta_mean / (pri.mu_beta_sd * pri.mu_beta_sd) + sum_beta / s2b) / prec_mu;
        mu = mean_mu + std_normal(&mut rng) / prec_mu.sqrt();

        let dev2: f64 = theta.iter().map(|t| (t[1] - mu).powi(2)).sum();
        s2b = inv_gamma(
            &mut rng,
            pri.sigma_beta_shape + n_seg as f64 / 2.0,
            pri.sigma_beta_scale + dev2 / 2.0,
        );

        for (s, th) in theta.iter().enumerate() {
            tr.alpha[s].push(th[0]);
            tr.beta[s].push(th[1]);
            for k in 0..n_cov {
                tr.gamma[s][k].push(th[2 + k]);
            }
        }
        tr.mu.push(mu);
        tr.s2b.push(s2b);
        tr.s2.push(s2);
    }
    Ok(tr)
}

/// Runs `n_chains` Gibbs chains (in parallel threads, each on its own
/// derived stream) over every segment of the panel.
pub fn fit_hierarchical(
    panel: &SubscriptionPanel,
    priors: &ElasticityPriors,
    cfg: &ElasticityConfig,
) -> Result<ElasticityPosterior> {
    priors.validate()?;
    cfg.validate()?;
    if panel.is_empty() {
        return Err(Error::EmptyInput("panel".into()));
    }
    let covariates = cfg
        .covariates
        .clone()
        .unwrap_or_else(|| panel.schema().numeric_names());
    let stats = build_stats(panel, &covariates, cfg)?;
    let n_cov = covariates.len();

    let traces: Vec<Result<ChainTrace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.n_chains as u64)
            .map(|c| {
                let stats = &stats;
                scope.spawn(move || run_chain(stats, n_cov, priors, cfg, c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    });
    let traces: Vec<ChainTrace> = traces.into_iter().collect::<Result<_>>()?;

    let concat = |f: &dyn Fn(&ChainTrace) -> &Vec<f64>| -> Vec<f64> {
        traces.iter().flat_map(|t| f(t).iter().copied()).collect()
    };
    let mut post = ElasticityPosterior {
        segments: Vec::with_capacity(stats.len()),
        covariate_names: covariates,
        mu_beta: concat(&|t| &t.mu),
        sigma2_beta: concat(&|t| &t.s2b),
        sigma2: concat(&|t| &t.s2),
        n_draws: cfg.n_draws,
        n_burnin: cfg.n_burnin,
        n_chains: cfg.n_chains,
        diagnostics: Diagnostics {
            rhat_mu_beta: f64::NAN,
            max_rhat_beta: f64::NAN,
        },
    };
    for (s, st) in stats.iter().enumerate() {
        let beta = concat(&|t| &t.beta[s]);
        let rhat_beta = rhat_or_one(&post, &beta);
        post.segments.push(SegmentPosterior {
            segment: st.id.clone(),
            n_obs: st.n,
            alpha: concat(&|t| &t.alpha[s]),
            beta,
            gamma: (0..n_cov).map(|k| concat(&|t| &t.gamma[s][k])).collect(),
            covariate_means: st.covariate_means.clone(),
            rhat_beta,
        });
    }
    post.diagnostics = Diagnostics {
        rhat_mu_beta: rhat_or_one(&post, &post.mu_beta),
        max_rhat_beta: post
            .segments
            .iter()
            .map(|s| s.rhat_beta)
            .fold(1.0, f64::max),
    };
    Ok(post)
}

/// Split-R̂ of a trace; 1 when too short to split.
fn rhat_or_one(post: &ElasticityPosterior, trace: &[f64]) -> f64 {
    let r = split_rhat(&post.chains(trace));
    if r.is_finite() {
        r
    } else {
        1.0
    }
}

// ---------------------------------------------------------------------------
// Cross-price elasticities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityMatrix {
    pub products: Vec<String>,
    /// `e[i][j]`: elasticity of product `i`'s demand to product `j`'s price.
    pub e: Vec<Vec<f64>>,
    /// Products whose own-price elasticity is not negative.
    pub flagged: Vec<String>,
}

/// Fits one Bayesian regression per product of its log demand on the log
/// prices of all products (over the periods every product shares), with the
/// own-price prior taken from `μ_β`'s hyperprior and `N(0, gamma_sd²)` on
/// cross terms. Entries are posterior means.
pub fn cross_elasticity_matrix(
    panel: &SubscriptionPanel,
    priors: &ElasticityPriors,
    cfg: &ElasticityConfig,
) -> Result<ElasticityMatrix> {
    priors.validate()?;
    cfg.validate()?;
    let products = panel.segments().to_vec();
    if products.len() < 2 {
        return Err(Error::config(
            "cross elasticities need at least two products",
        ));
    }
    let mut by_period: BTreeMap<i64, Vec<Option<(f64, f64)>>> = BTreeMap::new();
    for (j, p) in products.iter().enumerate() {
        for r in panel.segment_records(p)? {
            if !(r.price > 0.0) || r.quantity == 0 {
                return Err(Error::NonPositiveData(format!(
                    "product `{p}` period {}",
                    r.period
                )));
            }
            by_period
                .entry(r.period)
                .or_insert_with(|| vec![None; products.len()])[j] =
                Some((r.price.ln(), (r.quantity as f64).ln()));
        }
    }
    let shared: Vec<(i64, Vec<(f64, f64)>)> = by_period
        .into_iter()
        .filter_map(|(t, v)| v.into_iter().collect::<Option<Vec<_>>>().map(|v| (t, v)))
        .collect();
    let n = products.len();
    if shared.len() < n + 2 {
        return Err(Error::DegenerateDesign(format!(
            "only {} shared periods for {n} products",
            shared.len()
        )));
    }
    let logp: Vec<Vec<f64>> = (0..n)
        .map(|j| shared.iter().map(|(_, v)| v[j].0).collect())
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            let r = correlation(&logp[i], &logp[j]);
            if r.abs() > 0.99 {
                return Err(Error::CollinearPrices(
                    products[i].clone(),
                    products[j].clone(),
                    r,
                ));
            }
        }
    }
    let rows: Vec<Vec<f64>> = shared
        .iter()
        .map(|(t, v)| {
            let mut row = vec![1.0];
            row.extend(v.iter().map(|(lp, _)| *lp));
            row.extend(seasonal_controls(
                *t,
                cfg.seasonal_period,
                cfg.fourier_order,
            ));
            row
        })
        .collect();
    let dim = rows[0].len();
    let xtx = SymMatrix::gram(&rows, dim);
    let mut e = Vec::with_capacity(n);
    for i in 0..n {
        let y: Vec<f64> = shared.iter().map(|(_, v)| v[i].1).collect();
        let xty = crate::linalg::xty(&rows, &y, dim);
        let mut prior_mean = vec![0.0; dim];
        let mut prior_prec = vec![1.0 / (priors.gamma_sd * priors.gamma_sd); dim];
        prior_prec[0] = 1.0 / (priors.alpha_sd * priors.alpha_sd);
        prior_mean[1 + i] = priors.mu_beta_mean;
        prior_prec[1 + i] = 1.0 / (priors.mu_beta_sd * priors.mu_beta_sd);
        let mut rng = stream(cfg.seed, "cross-elasticity", i as u64);
        let draws = gibbs_linear(
            &xtx,
            &xty,
            y.iter().map(|v| v * v).sum(),
            y.len(),
            &prior_mean,
            &prior_prec,
            priors,
            cfg,
            &mut rng,
        )?;
        e.push((0..n).map(|j| draws[1 + j]).collect::<Vec<f64>>());
    }
    let flagged = (0..n)
        .filter(|&i| e[i][i] >= 0.0)
        .map(|i| products[i].clone())
        .collect();
    Ok(ElasticityMatrix {
        products,
        e,
        flagged,
    })
}

/// Conjugate two-block Gibbs for a single Bayesian linear regression;
/// returns posterior means of the coefficients over kept draws.
#[allow(clippy::too_many_arguments)]
fn gibbs_linear(
    xtx: &SymMatrix,
    xty: &[f64],
    yty: f64,
    n_obs: usize,
    prior_mean: &[f64],
    prior_prec: &[f64],
    priors: &ElasticityPriors,
    cfg: &ElasticityConfig,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let dim = xty.len();
    let mut s2 = 0.01;
    let mut acc = vec![0.0; dim];
    let mut kept = 0usize;
    let total = cfg.n_draws;
    for it in 0..total {
        let mut prec = xtx.scaled(1.0 / s2);
        for i in 0..dim {
            prec.add(i, i, prior_prec[i]);
        }
        let rhs: Vec<f64> = (0..dim)
            .map(|i| xty[i] / s2 + prior_prec[i] * prior_mean[i])
            .collect();
        let chol = Cholesky::factor(&prec)?;
        let m = chol.solve(&rhs);
        let z: Vec<f64> = (0..dim).map(|_| std_normal(rng)).collect();
        let th: Vec<f64> = m
            .iter()
            .zip(chol.backward(&z))
            .map(|(a, b)| a + b)
            .collect();
        let fit = th.iter().zip(xty).map(|(a, b)| a * b).sum::<f64>();
        let ssr = (yty - 2.0 * fit + quad(xtx, &th)).max(0.0);
        s2 = inv_gamma(
            rng,
            priors.noise_shape + n_obs as f64 / 2.0,
            priors.noise_scale + ssr / 2.0,
        );
        if it >= cfg.n_burnin {
            kept += 1;
            acc.iter_mut().zip(&th).for_each(|(a, t)| *a += t);
        }
    }
    Ok(acc.into_iter().map(|a| a / kept as f64).collect())
}
