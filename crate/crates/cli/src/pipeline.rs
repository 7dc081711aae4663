//! Pipeline stages shared by the command line and the service, so both
//! produce the same artifacts from the same inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subprice::backtest::{
    compare_strategies, prepare_strategies, run_backtest, status_quo_guardrails, BacktestProtocol,
    BacktestReport, CompareConfig, ComparisonReport, DemandForecaster, FittedModels, StrategySpec,
};
use subprice::churn::{build_churn_labels, fit_churn, predict_churn, ChurnFitConfig};
use subprice::elasticity::{fit_hierarchical, summarize_all, ElasticityConfig, ElasticityPriors};
use subprice::forecast::{
    fit_demand_model, predict_with_intervals, ForecastConfig, ForecastReport,
};
use subprice::governance::{digest_inputs, explain, ChurnReference, ExplainReport};
use subprice::optimizer::{
    build_problem, contexts_from_panel, solve, GuardrailConfig, PricingProblem, PricingSolution,
    SolverConfig,
};
use subprice::panel::{aggregate_segment, SplitSpec, SubscriptionPanel};
use subprice::risk::{run_stress, standard_scenarios, PricingPolicy, RiskEnvelope, StressConfig};
use subprice::synthgen::{GenConfig, GroundTruth};
use subprice::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Settings for fitting demand, elasticity and churn models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub elasticity: ElasticityConfig,
    pub priors: ElasticityPriors,
    pub churn_fit: ChurnFitConfig,
    /// Forward churn labeling window in periods (3 for a 90-day window on monthly data).
    pub churn_window: usize,
    pub forecast: ForecastConfig,
    pub forecast_horizon: usize,
    pub forecast_draws: usize,
    pub forecast_level: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            elasticity: ElasticityConfig {
                n_draws: 1500,
                n_burnin: 500,
                ..Default::default()
            },
            priors: ElasticityPriors::default(),
            churn_fit: ChurnFitConfig::default(),
            churn_window: 1,
            forecast: ForecastConfig::default(),
            forecast_horizon: 3,
            forecast_draws: 500,
            forecast_level: 0.9,
        }
    }
}

/// Everything a run needs besides its subcommand. Stored as JSON; each
/// command writes the configuration it ran with next to its artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub panel: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub guardrails: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub generate: GenConfig,
    pub fit: FitSettings,
    pub solver: SolverConfig,
    /// Relative churn rise allowed by the default guardrails.
    pub churn_headroom: f64,
    pub protocol: BacktestProtocol,
    pub compare: CompareConfig,
    pub stress: StressConfig,
    pub drift_threshold: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            panel: None,
            schema: None,
            guardrails: None,
            truth: None,
            generate: GenConfig::default(),
            fit: FitSettings::default(),
            solver: SolverConfig::default(),
            churn_headroom: 0.10,
            protocol: BacktestProtocol::default(),
            compare: CompareConfig::default(),
            stress: StressConfig {
                n_mc: 200,
                horizon: 3,
                seed: 0,
            },
            drift_threshold: subprice::governance::DRIFT_THRESHOLD,
            seed: 7,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Referenced files must exist.
    pub fn validate(&self) -> Result<()> {
        for (what, p) in [
            ("panel", &self.panel),
            ("schema", &self.schema),
            ("guardrails", &self.guardrails),
            ("truth", &self.truth),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Error::InvalidConfig(format!(
                        "{what} file `{}` does not exist",
                        p.display()
                    )));
                }
            }
        }
        if !(self.churn_headroom >= 0.0 && self.churn_headroom.is_finite()) {
            return Err(Error::InvalidConfig(
                "churn_headroom must be a non-negative number".into(),
            ));
        }
        Ok(())
    }

    /// Copies the run seed into every stochastic stage.
    pub fn seeded(mut self) -> Self {
        let s = self.seed;
        self.generate.seed = s;
        self.fit.elasticity.seed = s;
        self.fit.forecast.seed = s;
        self.solver.seed = s;
        self.compare.seed = s;
        self.stress.seed = s;
        self
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Models plus everything else a fit produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub models: FittedModels,
    /// Priors centred on this fit, for warm-starting the next refit.
    pub next_priors: ElasticityPriors,
    pub max_rhat_beta: f64,
    pub churn_converged: bool,
    pub forecasts: Vec<ForecastReport>,
    /// Segments too short to forecast.
    pub forecast_skipped: Vec<String>,
}

pub fn fit(
    panel: &SubscriptionPanel,
    settings: &FitSettings,
    priors: &ElasticityPriors,
) -> Result<FitOutput> {
    let post = fit_hierarchical(panel, priors, &settings.elasticity)?;
    let labels = build_churn_labels(panel, settings.churn_window, None)?;
    let churn_fit = fit_churn(&labels, &settings.churn_fit)?;
    let contexts = contexts_from_panel(panel, &churn_fit.model);

    let mut forecasts = Vec::new();
    let mut forecast_skipped = Vec::new();
    if settings.forecast_horizon > 0 {
        for seg in panel.segments() {
            let series = aggregate_segment(panel, seg, None)?;
            let model = match fit_demand_model(&series, &settings.forecast) {
                Ok(m) => m,
                Err(Error::SeriesTooShort { .. }) => {
                    forecast_skipped.push(seg.clone());
                    continue;
                }
                Err(e) => return Err(e),
            };
            let future = match series.covariate_rows().last() {
                Some(row) if !row.is_empty() => vec![row.clone(); settings.forecast_horizon],
                _ => vec![],
            };
            let fc = predict_with_intervals(
                &model,
                settings.forecast_horizon,
                &future,
                settings.forecast_draws,
                settings.forecast_level,
                settings.forecast.seed,
            )?;
            forecasts.push(ForecastReport::new(seg, &fc, None)?);
        }
    }

    Ok(FitOutput {
        next_priors: priors.informed(&post),
        max_rhat_beta: post.diagnostics.max_rhat_beta,
        churn_converged: churn_fit.converged,
        models: FittedModels {
            estimates: summarize_all(&post),
            churn: churn_fit.model,
            contexts,
        },
        forecasts,
        forecast_skipped,
    })
}

/// Predicted churn per segment at its current price.
pub fn churn_at_current_prices(models: &FittedModels) -> Result<Vec<(String, f64)>> {
    models
        .contexts
        .iter()
        .map(|c| {
            let x = c.churn_features.as_deref().unwrap_or(&[]);
            Ok((
                c.segment.clone(),
                predict_churn(&models.churn, c.current_price, c.current_price, x, c.tenure)?,
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Recommendations
// ---------------------------------------------------------------------------

pub struct Recommendation {
    pub problem: PricingProblem,
    pub guardrails: GuardrailConfig,
    pub solution: PricingSolution,
    pub explanations: Vec<ExplainReport>,
    /// Digest of the models, guardrails and solver settings.
    pub input_digest: String,
}

/// Builds and solves the pricing problem. Without explicit guardrails the
/// status-quo guardrails with `churn_headroom` apply.
pub fn recommend(
    models: &FittedModels,
    guardrails: Option<&GuardrailConfig>,
    churn_headroom: f64,
    solver: &SolverConfig,
) -> Result<Recommendation> {
    let guardrails = match guardrails {
        Some(g) => g.clone(),
        None => status_quo_guardrails(models, churn_headroom)?,
    };
    let problem = build_problem(
        &models.estimates,
        &models.churn,
        &models.contexts,
        &guardrails,
    )?;
    let solution = solve(&problem, solver, None)?;
    let reference = ChurnReference::from_contexts(&models.contexts)?;
    let explanations = explain(
        &solution,
        &models.churn,
        &models.estimates,
        &models.contexts,
        &reference,
    )?;
    let input_digest = digest_inputs(&(models, &guardrails, solver))?;
    Ok(Recommendation {
        problem,
        guardrails,
        solution,
        explanations,
        input_digest,
    })
}

/// The one serialization of a solution used by every front end.
pub fn solution_json(solution: &PricingSolution) -> Result<String> {
    Ok(serde_json::to_string_pretty(solution)?)
}

// ---------------------------------------------------------------------------
// Stress and backtests
// ---------------------------------------------------------------------------

/// Risk envelope of the four standard strategies over the standard scenario ladder.
pub fn stress(
    truth: &GroundTruth,
    history: &SubscriptionPanel,
    cfg: &RunConfig,
) -> Result<RiskEnvelope> {
    let (prepared, _) = prepare_strategies(
        truth,
        history,
        &StrategySpec::standard(),
        &cfg.protocol,
        &cfg.compare,
    )?;
    let policies: Vec<&dyn PricingPolicy> = prepared.iter().map(|p| p.policy.as_ref()).collect();
    run_stress(truth, &policies, &standard_scenarios(), &cfg.stress)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestOutput {
    pub comparison: ComparisonReport,
    /// Rolling-origin forecast accuracy; absent when the panel is too short.
    pub forecast: Option<BacktestReport>,
}

/// Strategy comparison over the protocol's test span, plus a rolling-origin
/// forecast backtest that trains on everything before the last
/// validation and test periods.
pub fn backtest(
    truth: &GroundTruth,
    history: &SubscriptionPanel,
    cfg: &RunConfig,
) -> Result<BacktestOutput> {
    let comparison = compare_strategies(
        truth,
        history,
        &StrategySpec::standard(),
        &cfg.protocol,
        &cfg.compare,
    )?;
    let split = cfg.protocol.split;
    let held_out = split.val_periods + split.test_periods;
    let span = history.period_span();
    let forecaster = DemandForecaster {
        config: cfg.fit.forecast.clone(),
        n_draws: cfg.fit.forecast_draws,
        level: cfg.fit.forecast_level,
    };
    let forecast = if span > held_out {
        let protocol = BacktestProtocol {
            split: SplitSpec {
                train_periods: span - held_out,
                ..split
            },
            ..cfg.protocol.clone()
        };
        match run_backtest(history, &protocol, &forecaster, cfg.seed) {
            Ok(r) => Some(r),
            Err(Error::SeriesTooShort { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(BacktestOutput {
        comparison,
        forecast,
    })
}
