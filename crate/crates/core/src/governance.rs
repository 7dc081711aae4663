//! Explainability, the append-only audit trail, overrides and drift checks.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::churn::ChurnModel;
use crate::elasticity::ElasticityEstimate;
use crate::error::{Error, Result};
use crate::optimizer::{ConstraintStatus, PricingSolution, SegmentContext, SolveStatus};
use crate::panel::{FeatureValue, SubscriptionPanel};

// ---------------------------------------------------------------------------
// Explanations
// ---------------------------------------------------------------------------

/// A named, signed contribution to a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub name: String,
    pub contribution: f64,
}

impl Driver {
    fn new(name: impl Into<String>, contribution: f64) -> Self {
        Driver {
            name: name.into(),
            contribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardrailState {
    pub name: String,
    pub binding: bool,
    pub slack: f64,
}

/// Point around which churn attributions are centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnReference {
    pub price: f64,
    pub features: Vec<f64>,
    pub tenure: f64,
}

impl ChurnReference {
    /// Averages over segments that have churn features.
    pub fn from_contexts(contexts: &[SegmentContext]) -> Result<Self> {
        let rows: Vec<(&SegmentContext, &Vec<f64>)> = contexts
            .iter()
            .filter_map(|c| c.churn_features.as_ref().map(|f| (c, f)))
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyInput("no segment has churn features".into()));
        }
        let n = rows.len() as f64;
        let k = rows[0].1.len();
        Ok(ChurnReference {
            price: rows.iter().map(|(c, _)| c.current_price).sum::<f64>() / n,
            features: (0..k)
                .map(|j| rows.iter().map(|(_, f)| f[j]).sum::<f64>() / n)
                .collect(),
            tenure: rows.iter().map(|(c, _)| c.tenure).sum::<f64>() / n,
        })
    }
}

/// Exact additive decomposition of the churn logit.
///
/// `base + Σ contributions` equals the logit at the evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnAttribution {
    pub base: f64,
    pub terms: Vec<Driver>,
}

impl ChurnAttribution {
    pub fn logit(&self) -> f64 {
        self.base + self.terms.iter().map(|d| d.contribution).sum::<f64>()
    }
}

/// Attributions `θ_j·(x_j − x̄_j)` of the churn score at `price` (held in
/// steady state, so the lagged price equals it).
pub fn churn_attribution(
    model: &ChurnModel,
    price: f64,
    features: &[f64],
    tenure: f64,
    reference: &ChurnReference,
) -> Result<ChurnAttribution> {
    if features.len() != model.theta3.len() || reference.features.len() != model.theta3.len() {
        return Err(Error::SchemaMismatch(format!(
            "churn model expects {} features",
            model.theta3.len()
        )));
    }
    let base = model.logit(
        reference.price,
        reference.price,
        &reference.features,
        reference.tenure,
    )?;
    let mut terms = vec![
        Driver::new("price", model.theta1 * (price - reference.price)),
        Driver::new("prev_price", model.theta2 * (price - reference.price)),
    ];
    for (((name, c), x), r) in model.theta3.iter().zip(features).zip(&reference.features) {
        terms.push(Driver::new(name.clone(), c * (x - r)));
    }
    terms.push(Driver::new(
        "tenure",
        model.theta4 * (tenure - reference.tenure),
    ));
    Ok(ChurnAttribution { base, terms })
}

fn pad3(mut drivers: Vec<Driver>) -> Vec<Driver> {
    drivers.truncate(3);
    while drivers.len() < 3 {
        drivers.push(Driver::new("none", 0.0));
    }
    drivers
}

/// Largest three by magnitude (ties keep input order), padded with
/// zero-contribution entries.
fn top3(mut drivers: Vec<Driver>) -> Vec<Driver> {
    drivers.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
    pad3(drivers)
}

fn segment_constraints<'a>(
    constraints: &'a [ConstraintStatus],
    segment: &'a str,
) -> impl Iterator<Item = &'a ConstraintStatus> {
    constraints
        .iter()
        .filter(move |c| match c.name.split_once(':') {
            Some(("fairness", ids)) => ids.split('/').any(|id| id == segment),
            Some((_, id)) => id == segment,
            None => false,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub segment: String,
    pub elasticity_drivers: Vec<Driver>,
    pub churn_drivers: Vec<Driver>,
    pub constraint_drivers: Vec<Driver>,
    pub guardrail_status: Vec<GuardrailState>,
    pub recommended_price: f64,
    pub baseline_price: f64,
    /// The full decomposition behind `churn_drivers`.
    pub churn_attribution: ChurnAttribution,
}

/// One report per segment of `solution`, in solution order.
pub fn explain(
    solution: &PricingSolution,
    churn: &ChurnModel,
    estimates: &[ElasticityEstimate],
    contexts: &[SegmentContext],
    reference: &ChurnReference,
) -> Result<Vec<ExplainReport>> {
    let mut out = Vec::with_capacity(solution.prices.len());
    for (segment, &price) in &solution.prices {
        let mismatch =
            |what: &str| Error::SegmentMismatch(format!("segment `{segment}` has no {what}"));
        let est = estimates
            .iter()
            .find(|e| &e.segment == segment)
            .ok_or_else(|| mismatch("elasticity estimate"))?;
        let ctx = contexts
            .iter()
            .find(|c| &c.segment == segment)
            .ok_or_else(|| mismatch("context"))?;
        let features = ctx
            .churn_features
            .as_deref()
            .ok_or_else(|| mismatch("churn features"))?;
        let z = ctx
            .demand_covariates
            .clone()
            .unwrap_or_else(|| est.reference_covariates());
        let elasticity = est
            .covariates
            .iter()
            .zip(&z)
            .map(|((n, _), x)| Driver::new(n.clone(), est.gamma[n].mean * x))
            .collect();
        let attribution = churn_attribution(churn, price, features, ctx.tenure, reference)?;
        let mut constraints: Vec<&ConstraintStatus> =
            segment_constraints(&solution.constraints, segment).collect();
        constraints.sort_by(|a, b| a.slack.total_cmp(&b.slack));
        out.push(ExplainReport {
            segment: segment.clone(),
            elasticity_drivers: top3(elasticity),
            churn_drivers: top3(attribution.terms.clone()),
            constraint_drivers: pad3(
                constraints
                    .iter()
                    .map(|c| Driver::new(c.name.clone(), c.slack))
                    .collect(),
            ),
            guardrail_status: segment_constraints(&solution.constraints, segment)
                .map(|c| GuardrailState {
                    name: c.name.clone(),
                    binding: c.binding,
                    slack: c.slack,
                })
                .collect(),
            recommended_price: price,
            baseline_price: ctx.current_price,
            churn_attribution: attribution,
        });
    }
    if out.len() != contexts.len() {
        return Err(Error::SegmentMismatch(format!(
            "solution covers {} segments, contexts cover {}",
            out.len(),
            contexts.len()
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Audit trail
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApprovalStatus {
    Auto,
    PendingOverride,
    Approved,
    Rejected,
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub sequence_number: u64,
    pub timestamp: String,
    pub segment_id: String,
    pub input_digest: String,
    pub driver_attributions: Vec<Driver>,
    pub recommended_price: f64,
    pub constraint_outcomes: Vec<ConstraintStatus>,
    pub approval_status: ApprovalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    /// Sequence number of the entry this one resolves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolves: Option<u64>,
}

/// An entry before the log assigns its sequence number and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct NewAuditEntry {
    pub segment_id: String,
    pub input_digest: String,
    pub driver_attributions: Vec<Driver>,
    pub recommended_price: f64,
    pub constraint_outcomes: Vec<ConstraintStatus>,
    pub approval_status: ApprovalStatus,
    pub approver: Option<String>,
    pub rationale: Option<String>,
    pub resolves: Option<u64>,
}

/// SHA-256 hex digest of the canonical JSON form of `inputs` (object keys
/// sorted, no whitespace).
pub fn digest_inputs<T: Serialize>(inputs: &T) -> Result<String> {
    let canonical = serde_json::to_string(&serde_json::to_value(inputs)?)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Every entry gets this timestamp; for reproducible logs.
    Fixed(String),
}

impl Clock {
    pub fn now(&self) -> String {
        match self {
            Clock::System => {
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
            }
            Clock::Fixed(t) => t.clone(),
        }
    }
}

/// Single-writer JSON-lines audit log. Entries can be appended and read,
/// never changed.
#[derive(Debug)]
pub struct AuditLog {
    path: PathBuf,
    file: File,
    entries: Vec<AuditEntry>,
    clock: Clock,
}

fn storage(e: impl std::fmt::Display) -> Error {
    Error::StorageFailure(e.to_string())
}

/// Reads and validates every entry of a log file.
pub fn read_audit_log(path: impl AsRef<Path>) -> Result<Vec<AuditEntry>> {
    let file = File::open(path.as_ref()).map_err(storage)?;
    let mut entries: Vec<AuditEntry> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(storage)?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: AuditEntry = serde_json::from_str(&line)
            .map_err(|e| Error::StorageFailure(format!("line {}: {e}", i + 1)))?;
        if entries
            .last()
            .is_some_and(|prev| entry.sequence_number <= prev.sequence_number)
        {
            return Err(Error::StorageFailure(format!(
                "line {}: sequence numbers must increase",
                i + 1
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}

impl AuditLog {
    /// Opens (or creates) the log at `path`, loading existing entries.
    pub fn open(path: impl AsRef<Path>, clock: Clock) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(storage)?;
        let entries = read_audit_log(&path)?;
        Ok(AuditLog {
            path,
            file,
            entries,
            clock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn get(&self, sequence_number: u64) -> Option<&AuditEntry> {
        self.entries
            .iter()
            .find(|e| e.sequence_number == sequence_number)
    }

    fn append(&mut self, new: NewAuditEntry) -> Result<u64> {
        let sequence_number = self.entries.last().map_or(1, |e| e.sequence_number + 1);
        let entry = AuditEntry {
            sequence_number,
            timestamp: self.clock.now(),
            segment_id: new.segment_id,
            input_digest: new.input_digest,
            driver_attributions: new.driver_attributions,
            recommended_price: new.recommended_price,
            constraint_outcomes: new.constraint_outcomes,
            approval_status: new.approval_status,
            approver: new.approver,
            rationale: new.rationale,
            resolves: new.resolves,
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(storage)?;
        self.file.sync_data().map_err(storage)?;
        self.entries.push(entry);
        Ok(sequence_number)
    }
}

/// Appends `entry`, returning its sequence number once it is on disk.
pub fn audit_append(log: &mut AuditLog, entry: NewAuditEntry) -> Result<u64> {
    log.append(entry)
}

/// Logs one entry per segment of `solution`. Fallback solutions are logged
/// as pending overrides with the fallback price in force.
pub fn record_solution(
    log: &mut AuditLog,
    solution: &PricingSolution,
    explanations: &[ExplainReport],
    input_digest: &str,
) -> Result<Vec<u64>> {
    let status = if solution.status == SolveStatus::Fallback {
        ApprovalStatus::PendingOverride
    } else {
        ApprovalStatus::Auto
    };
    let mut seqs = Vec::with_capacity(solution.prices.len());
    for (segment, &price) in &solution.prices {
        let drivers = explanations
            .iter()
            .find(|r| &r.segment == segment)
            .map(|r| r.churn_attribution.terms.clone())
            .unwrap_or_default();
        seqs.push(
            log.append(NewAuditEntry {
                segment_id: segment.clone(),
                input_digest: input_digest.to_string(),
                driver_attributions: drivers,
                recommended_price: price,
                constraint_outcomes: segment_constraints(&solution.constraints, segment)
                    .cloned()
                    .collect(),
                approval_status: status,
                approver: None,
                rationale: None,
                resolves: None,
            })?,
        );
    }
    Ok(seqs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideDecision {
    Approve,
    Reject,
}

/// Resolves a pending override by appending a new entry; the original is
/// left untouched. An approval may set a new price; a rejection keeps the
/// fallback price.
pub fn request_override(
    log: &mut AuditLog,
    entry: u64,
    approver: &str,
    rationale: &str,
    decision: OverrideDecision,
    override_price: Option<f64>,
) -> Result<AuditEntry> {
    let original = log
        .get(entry)
        .ok_or_else(|| Error::InvalidTransition(format!("no audit entry {entry}")))?
        .clone();
    if original.approval_status != ApprovalStatus::PendingOverride {
        return Err(Error::InvalidTransition(format!(
            "entry {entry} is {:?}, not pending_override",
            original.approval_status
        )));
    }
    if log.entries().iter().any(|e| e.resolves == Some(entry)) {
        return Err(Error::InvalidTransition(format!(
            "entry {entry} is already resolved"
        )));
    }
    let (status, price) = match decision {
        OverrideDecision::Approve => {
            if let Some(p) = override_price.filter(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::config(format!(
                    "override price {p} must be positive"
                )));
            }
            (
                ApprovalStatus::Approved,
                override_price.unwrap_or(original.recommended_price),
            )
        }
        OverrideDecision::Reject => (ApprovalStatus::Rejected, original.recommended_price),
    };
    let seq = log.append(NewAuditEntry {
        segment_id: original.segment_id.clone(),
        input_digest: original.input_digest.clone(),
        driver_attributions: original.driver_attributions.clone(),
        recommended_price: price,
        constraint_outcomes: original.constraint_outcomes.clone(),
        approval_status: status,
        approver: Some(approver.to_string()),
        rationale: Some(rationale.to_string()),
        resolves: Some(entry),
    })?;
    Ok(log.get(seq).expect("just appended").clone())
}

/// Price and status in force for each segment after replaying `entries`.
pub fn replay(entries: &[AuditEntry]) -> BTreeMap<String, (f64, ApprovalStatus)> {
    let mut state = BTreeMap::new();
    for e in entries {
        state.insert(
            e.segment_id.clone(),
            (e.recommended_price, e.approval_status),
        );
    }
    state
}

// ---------------------------------------------------------------------------
// Drift
// ---------------------------------------------------------------------------

pub const DRIFT_BINS: usize = 20;
pub const DRIFT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub feature: String,
    /// `KL(current ‖ reference)` in nats.
    pub kl_divergence: f64,
    pub threshold: f64,
    pub triggered: bool,
}

/// Histogram KL divergence of `current` from `reference` on a shared
/// 20-bin support, with one pseudo-count per bin.
pub fn drift_check(
    feature: &str,
    reference: &[f64],
    current: &[f64],
    threshold: f64,
) -> Result<DriftReport> {
    let reference: Vec<f64> = reference
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let current: Vec<f64> = current.iter().copied().filter(|v| v.is_finite()).collect();
    if reference.is_empty() || current.is_empty() {
        return Err(Error::EmptySample(feature.to_string()));
    }
    let (lo, hi) = reference
        .iter()
        .chain(&current)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let width = (hi - lo) / DRIFT_BINS as f64;
    let hist = |xs: &[f64]| {
        let mut counts = [1.0; DRIFT_BINS];
        for &x in xs {
            let b = if width > 0.0 {
                (((x - lo) / width) as usize).min(DRIFT_BINS - 1)
            } else {
                0
            };
            counts[b] += 1.0;
        }
        let total = xs.len() as f64 + DRIFT_BINS as f64;
        counts.map(|c| c / total)
    };
    let (p, q) = (hist(&reference), hist(&current));
    let kl: f64 = q
        .iter()
        .zip(&p)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum::<f64>()
        .max(0.0);
    Ok(DriftReport {
        feature: feature.to_string(),
        kl_divergence: kl,
        threshold,
        triggered: kl > threshold,
    })
}

/// Drift of price, quantity and every numeric covariate between two panels.
pub fn drift_panel(
    reference: &SubscriptionPanel,
    current: &SubscriptionPanel,
    threshold: f64,
) -> Result<Vec<DriftReport>> {
    let column = |panel: &SubscriptionPanel, name: &str| -> Vec<f64> {
        panel
            .records()
            .iter()
            .map(|r| match name {
                "price" => r.price,
                "quantity" => r.quantity as f64,
                _ => r
                    .covariates
                    .get(name)
                    .and_then(FeatureValue::as_num)
                    .unwrap_or(f64::NAN),
            })
            .collect()
    };
    let mut names = vec!["price".to_string(), "quantity".to_string()];
    names.extend(reference.schema().numeric_names());
    names
        .iter()
        .map(|n| drift_check(n, &column(reference, n), &column(current, n), threshold))
        .collect()
}
