//! Command-line front end: argument parsing and one runner per subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use subprice::backtest::FittedModels;
use subprice::governance::{drift_panel, record_solution, AuditLog, Clock};
use subprice::optimizer::{GuardrailConfig, SolveStatus};
use subprice::panel::{read_csv_file, write_csv_file, FeatureSchema, SubscriptionPanel};
use subprice::synthgen::{generate_population, GroundTruth};

use crate::pipeline::{self, RunConfig};
use crate::service;

#[derive(Debug, Parser)]
#[command(
    name = "subprice",
    version,
    about = "Churn-aware, guardrailed subscription pricing"
)]
pub struct Cli {
    /// Run configuration JSON; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts (and default location of inputs).
    #[arg(long, global = true, env = "SUBPRICE_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true, env = "SUBPRICE_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel with known ground truth.
    Generate {
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        experiment_fraction: Option<f64>,
    },
    /// Fit demand forecasts, hierarchical elasticities and the churn model.
    Fit {
        #[command(flatten)]
        inputs: PanelInputs,
        /// Posterior draws per chain, burn-in included.
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        /// Churn labeling window in periods.
        #[arg(long)]
        churn_window: Option<usize>,
    },
    /// Solve for guardrailed prices, explain them and append to the audit log.
    Optimize {
        /// Fitted models (default: <out-dir>/models.json).
        #[arg(long)]
        models: Option<PathBuf>,
        /// Guardrail JSON; status-quo guardrails when absent.
        #[arg(long)]
        guardrails: Option<PathBuf>,
        /// Random starts of the solver.
        #[arg(long)]
        starts: Option<usize>,
        /// Relative churn rise allowed by the status-quo guardrails.
        #[arg(long)]
        churn_headroom: Option<f64>,
        #[command(flatten)]
        audit: AuditArgs,
    },
    /// Monte Carlo stress test of the standard strategies.
    Stress {
        #[command(flatten)]
        inputs: PanelInputs,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Monte Carlo draws per cell (at least 100).
        #[arg(long)]
        n_mc: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Compare pricing strategies and backtest the demand forecaster.
    Backtest {
        #[command(flatten)]
        inputs: PanelInputs,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Simulated paths per strategy.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// KL drift of a current panel against a reference panel.
    Drift {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        current: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Serve the recalibration API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Panel to fit before accepting requests.
        #[command(flatten)]
        inputs: PanelInputs,
        #[arg(long)]
        fit_on_start: bool,
        #[command(flatten)]
        audit: AuditArgs,
    },
}

#[derive(Debug, Args)]
pub struct PanelInputs {
    /// Panel CSV (default: <out-dir>/panel.csv).
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Schema sidecar JSON (default: <out-dir>/schema.json).
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Audit log (default: <out-dir>/audit.jsonl).
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
    /// Fixed RFC 3339 timestamp for audit entries, for reproducible logs.
    #[arg(long)]
    pub timestamp: Option<String>,
}

impl AuditArgs {
    fn clock(&self) -> Clock {
        self.timestamp.clone().map_or(Clock::System, Clock::Fixed)
    }

    fn path(&self, out: &Path) -> PathBuf {
        self.audit_log
            .clone()
            .unwrap_or_else(|| out.join("audit.jsonl"))
    }
}

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The optimizer found no feasible prices and a fallback was issued.
    Fallback,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::Fallback => 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = resolve(&cli)?;
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let default_in = |given: &Option<PathBuf>, from_cfg: &Option<PathBuf>, name: &str| -> PathBuf {
        given
            .clone()
            .or_else(|| from_cfg.clone())
            .unwrap_or_else(|| out.join(name))
    };

    match &cli.command {
        Command::Generate {
            segments,
            periods,
            noise_sigma,
            experiment_fraction,
        } => {
            set(&mut cfg.generate.n_segments, *segments);
            set(&mut cfg.generate.n_periods, *periods);
            set(&mut cfg.generate.noise_sigma, *noise_sigma);
            set(&mut cfg.generate.experiment_fraction, *experiment_fraction);
            let cfg = finish(cfg, &out, "generate")?;
            let (panel, truth) = generate_population(&cfg.generate)?;
            write_csv_file(&panel, out.join("panel.csv"))?;
            write_json(&out.join("schema.json"), panel.schema())?;
            write_json(&out.join("truth.json"), &truth)?;
            let mut s = String::new();
            writeln!(
                s,
                "generated {} segments x {} periods (seed {})",
                truth.segments.len(),
                cfg.generate.n_periods,
                cfg.seed
            )?;
            writeln!(
                s,
                "population elasticity mean {:.3}, sd {:.3}",
                truth.population_mu_beta, truth.population_sigma_beta
            )?;
            writeln!(s, "artifacts: panel.csv, schema.json, truth.json")?;
            summary(&out, "generate", &s)?;
        }
        Command::Fit {
            inputs,
            draws,
            burnin,
            churn_window,
        } => {
            set(&mut cfg.fit.elasticity.n_draws, *draws);
            set(&mut cfg.fit.elasticity.n_burnin, *burnin);
            set(&mut cfg.fit.churn_window, *churn_window);
            cfg.panel = Some(default_in(&inputs.panel, &cfg.panel, "panel.csv"));
            cfg.schema = Some(default_in(&inputs.schema, &cfg.schema, "schema.json"));
            let cfg = finish(cfg, &out, "fit")?;
            let panel = load_panel(&cfg)?;
            let fitted = pipeline::fit(&panel, &cfg.fit, &cfg.fit.priors)?;
            write_json(&out.join("models.json"), &fitted.models)?;
            write_json(&out.join("elasticity.json"), &fitted.models.estimates)?;
            write_json(&out.join("churn.json"), &fitted.models.churn)?;
            write_json(&out.join("forecasts.json"), &fitted.forecasts)?;
            let mut s = String::new();
            writeln!(
                s,
                "{:<12} {:>9} {:>9} {:>9}",
                "segment", "beta", "lo95", "hi95"
            )?;
            for e in &fitted.models.estimates {
                writeln!(
                    s,
                    "{:<12} {:>9.3} {:>9.3} {:>9.3}",
                    e.segment, e.beta.mean, e.beta.lo, e.beta.hi
                )?;
            }
            writeln!(s, "max R-hat(beta) {:.3}", fitted.max_rhat_beta)?;
            let c = &fitted.models.churn;
            writeln!(
                s,
                "churn: theta1 {:.4}, theta2 {:.4}, converged {}",
                c.theta1, c.theta2, fitted.churn_converged
            )?;
            if !fitted.forecast_skipped.is_empty() {
                writeln!(
                    s,
                    "forecast skipped (series too short): {}",
                    fitted.forecast_skipped.join(", ")
                )?;
            }
            writeln!(
                s,
                "artifacts: models.json, elasticity.json, churn.json, forecasts.json"
            )?;
            summary(&out, "fit", &s)?;
        }
        Command::Optimize {
            models,
            guardrails,
            starts,
            churn_headroom,
            audit,
        } => {
            set(&mut cfg.solver.n_starts, *starts);
            set(&mut cfg.churn_headroom, *churn_headroom);
            if guardrails.is_some() {
                cfg.guardrails = guardrails.clone();
            }
            let cfg = finish(cfg, &out, "optimize")?;
            let models_path = models.clone().unwrap_or_else(|| out.join("models.json"));
            let models: FittedModels = read_json(&models_path)?;
            let guard: Option<GuardrailConfig> =
                cfg.guardrails.as_ref().map(read_json).transpose()?;
            let rec =
                pipeline::recommend(&models, guard.as_ref(), cfg.churn_headroom, &cfg.solver)?;
            std::fs::write(
                out.join("solution.json"),
                pipeline::solution_json(&rec.solution)? + "\n",
            )?;
            write_json(&out.join("explain.json"), &rec.explanations)?;
            let mut log = AuditLog::open(audit.path(&out), audit.clock())?;
            let seqs = record_solution(
                &mut log,
                &rec.solution,
                &rec.explanations,
                &rec.input_digest,
            )?;
            let mut s = String::new();
            writeln!(
                s,
                "status {:?}, objective {:.2}",
                rec.solution.status, rec.solution.objective
            )?;
            writeln!(s, "{:<12} {:>10} {:>10}", "segment", "current", "price")?;
            for r in &rec.explanations {
                writeln!(
                    s,
                    "{:<12} {:>10.2} {:>10.2}",
                    r.segment, r.baseline_price, r.recommended_price
                )?;
            }
            for c in rec.solution.binding() {
                writeln!(s, "binding: {}", c.name)?;
            }
            writeln!(
                s,
                "audit entries {}..={}",
                seqs.first().unwrap_or(&0),
                seqs.last().unwrap_or(&0)
            )?;
            if rec.solution.status == SolveStatus::Fallback {
                writeln!(
                    s,
                    "no feasible prices: fallback issued, entries await override"
                )?;
            }
            summary(&out, "optimize", &s)?;
            if rec.solution.status == SolveStatus::Fallback {
                return Ok(Outcome::Fallback);
            }
        }
        Command::Stress {
            inputs,
            truth,
            n_mc,
            horizon,
        } => {
            set(&mut cfg.stress.n_mc, *n_mc);
            set(&mut cfg.stress.horizon, *horizon);
            cfg.panel = Some(default_in(&inputs.panel, &cfg.panel, "panel.csv"));
            cfg.schema = Some(default_in(&inputs.schema, &cfg.schema, "schema.json"));
            cfg.truth = Some(default_in(truth, &cfg.truth, "truth.json"));
            let cfg = finish(cfg, &out, "stress")?;
            let panel = load_panel(&cfg)?;
            let truth: GroundTruth = read_json(cfg.truth.as_ref().expect("set above"))?;
            let env = pipeline::stress(&truth, &panel, &cfg)?;
            write_json(&out.join("envelope.json"), &env)?;
            env.write_csv(std::fs::File::create(out.join("envelope.csv"))?)?;
            summary(&out, "stress", &env.to_text_table())?;
        }
        Command::Backtest {
            inputs,
            truth,
            paths,
        } => {
            set(&mut cfg.compare.n_paths, *paths);
            cfg.panel = Some(default_in(&inputs.panel, &cfg.panel, "panel.csv"));
            cfg.schema = Some(default_in(&inputs.schema, &cfg.schema, "schema.json"));
            cfg.truth = Some(default_in(truth, &cfg.truth, "truth.json"));
            let cfg = finish(cfg, &out, "backtest")?;
            let panel = load_panel(&cfg)?;
            let truth: GroundTruth = read_json(cfg.truth.as_ref().expect("set above"))?;
            let report = pipeline::backtest(&truth, &panel, &cfg)?;
            write_json(&out.join("comparison.json"), &report.comparison)?;
            let mut s = report.comparison.to_text_table();
            if let Some(f) = &report.forecast {
                write_json(&out.join("forecast_backtest.json"), f)?;
                writeln!(
                    s,
                    "forecast: MAPE {:.2}%, RMSE {:.2}, ICP {:.3}",
                    f.aggregate.mape, f.aggregate.rmse, f.aggregate.icp
                )?;
            }
            summary(&out, "backtest", &s)?;
        }
        Command::Drift {
            reference,
            current,
            schema,
            threshold,
        } => {
            set(&mut cfg.drift_threshold, *threshold);
            cfg.schema = Some(default_in(schema, &cfg.schema, "schema.json"));
            let cfg = finish(cfg, &out, "drift")?;
            let schema = FeatureSchema::from_json_file(cfg.schema.as_ref().expect("set above"))?;
            let a = read_csv_file(reference, schema.clone())?;
            let b = read_csv_file(current, schema)?;
            let reports = drift_panel(&a, &b, cfg.drift_threshold)?;
            write_json(&out.join("drift.json"), &reports)?;
            let mut s = String::new();
            for r in &reports {
                writeln!(
                    s,
                    "{:<16} KL {:.4} {}",
                    r.feature,
                    r.kl_divergence,
                    if r.triggered { "TRIGGERED" } else { "ok" }
                )?;
            }
            summary(&out, "drift", &s)?;
        }
        Command::Serve {
            addr,
            inputs,
            fit_on_start,
            audit,
        } => {
            if *fit_on_start {
                cfg.panel = Some(default_in(&inputs.panel, &cfg.panel, "panel.csv"));
                cfg.schema = Some(default_in(&inputs.schema, &cfg.schema, "schema.json"));
            }
            let cfg = finish(cfg, &out, "serve")?;
            let initial = if *fit_on_start {
                Some(load_panel(&cfg)?)
            } else {
                None
            };
            let state = service::AppState::new(cfg, audit.path(&out), audit.clock())?;
            if let Some(panel) = initial {
                state.recalibrate_blocking(panel)?;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, service::router(state)).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(Outcome::Done)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Seeds, validates and records the configuration a command runs with.
fn finish(cfg: RunConfig, out: &Path, command: &str) -> anyhow::Result<RunConfig> {
    let cfg = cfg.seeded();
    cfg.validate()?;
    cfg.save(out.join(format!("{command}_config.json")))?;
    Ok(cfg)
}

fn load_panel(cfg: &RunConfig) -> anyhow::Result<SubscriptionPanel> {
    let (Some(panel), Some(schema)) = (&cfg.panel, &cfg.schema) else {
        bail!("a panel CSV and schema JSON are required");
    };
    let schema = FeatureSchema::from_json_file(schema)
        .with_context(|| format!("reading schema {}", schema.display()))?;
    read_csv_file(panel, schema).with_context(|| format!("reading panel {}", panel.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> anyhow::Result<T> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn summary(out: &Path, command: &str, text: &str) -> anyhow::Result<()> {
    print!("{text}");
    std::fs::write(out.join(format!("{command}_summary.txt")), text)?;
    Ok(())
}
