//! Subscription panel data: records, feature schema, validation, preprocessing
//! and chronological partitioning.
//!
//! A [`SubscriptionPanel`] is immutable once built. Records are sorted by
//! `(segment_id, period)` and every record carries exactly the covariates
//! declared in its [`FeatureSchema`], with absent values stored as
//! [`FeatureValue::Missing`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered covariate declarations. Serialized as the schema sidecar
/// `{"features":[{"name":...,"kind":"numeric"|"categorical"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: impl IntoIterator<Item = (impl Into<String>, FeatureKind)>) -> Self {
        FeatureSchema {
            features: features
                .into_iter()
                .map(|(name, kind)| FeatureSpec {
                    name: name.into(),
                    kind,
                })
                .collect(),
        }
    }

    pub fn kind_of(&self, name: &str) -> Option<FeatureKind> {
        self.features
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.kind)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn numeric_names(&self) -> Vec<String> {
        self.features
            .iter()
            .filter(|f| f.kind == FeatureKind::Numeric)
            .map(|f| f.name.clone())
            .collect()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if RESERVED_COLUMNS.contains(&f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "feature name `{}` is reserved",
                    f.name
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "feature `{}` declared twice",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// A covariate value. JSON form is a bare number, a string, or `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Num(f64),
    Cat(String),
    Missing,
}

impl FeatureValue {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            FeatureValue::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureValue::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriptionRecord {
    pub segment_id: String,
    pub period: i64,
    pub price: f64,
    pub quantity: u64,
    pub unit_cost: f64,
    pub churned: u64,
    pub tenure: f64,
    #[serde(default)]
    pub covariates: BTreeMap<String, FeatureValue>,
}

impl SubscriptionRecord {
    pub fn churn_rate(&self) -> f64 {
        if self.quantity == 0 {
            0.0
        } else {
            self.churned as f64 / self.quantity as f64
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidRecord(format!(
                "segment `{}` period {}: {what}",
                self.segment_id, self.period
            )))
        };
        if !(self.price.is_finite() && self.price > 0.0) {
            return bad("price must be finite and > 0");
        }
        if !(self.unit_cost.is_finite() && self.unit_cost >= 0.0) {
            return bad("unit_cost must be finite and >= 0");
        }
        if self.churned > self.quantity {
            return bad("churned exceeds quantity");
        }
        if !(self.tenure.is_finite() && self.tenure >= 0.0) {
            return bad("tenure must be finite and >= 0");
        }
        if self.segment_id.is_empty() {
            return bad("empty segment id");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SubscriptionPanel {
    records: Vec<SubscriptionRecord>,
    segments: Vec<String>,
    offsets: Vec<(usize, usize)>,
    period_range: Option<(i64, i64)>,
    schema: FeatureSchema,
    prepared: bool,
}

/// Validates, sorts and indexes `records` against `schema`.
///
/// Covariates declared in the schema but absent from a record are stored as
/// missing. Unknown covariates or values of the wrong kind are rejected.
pub fn build_panel(
    records: Vec<SubscriptionRecord>,
    schema: FeatureSchema,
) -> Result<SubscriptionPanel> {
    if records.is_empty() {
        return Err(Error::EmptyInput("panel needs at least one record".into()));
    }
    SubscriptionPanel::assemble(records, schema, false)
}

impl SubscriptionPanel {
    fn assemble(
        mut records: Vec<SubscriptionRecord>,
        schema: FeatureSchema,
        prepared: bool,
    ) -> Result<Self> {
        schema.validate()?;
        for rec in &mut records {
            rec.validate()?;
            for (name, value) in &rec.covariates {
                let kind = schema.kind_of(name).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "covariate `{name}` is not declared in the schema"
                    ))
                })?;
                let ok = matches!(
                    (kind, value),
                    (_, FeatureValue::Missing)
                        | (FeatureKind::Numeric, FeatureValue::Num(_))
                        | (FeatureKind::Categorical, FeatureValue::Cat(_))
                );
                if !ok {
                    return Err(Error::SchemaMismatch(format!(
                        "covariate `{name}` has a value of the wrong kind ({value:?})"
                    )));
                }
                if let FeatureValue::Num(v) = value {
                    if !v.is_finite() {
                        return Err(Error::SchemaMismatch(format!(
                            "covariate `{name}` is not finite"
                        )));
                    }
                }
            }
            for f in &schema.features {
                rec.covariates
                    .entry(f.name.clone())
                    .or_insert(FeatureValue::Missing);
            }
        }
        records.sort_by(|a, b| {
            a.segment_id
                .cmp(&b.segment_id)
                .then(a.period.cmp(&b.period))
        });
        for w in records.windows(2) {
            if w[0].segment_id == w[1].segment_id && w[0].period == w[1].period {
                return Err(Error::DuplicateKey {
                    segment: w[0].segment_id.clone(),
                    period: w[0].period,
                });
            }
        }
        let mut segments = Vec::new();
        let mut offsets = Vec::new();
        let mut start = 0;
        for i in 1..=records.len() {
            if i == records.len() || records[i].segment_id != records[start].segment_id {
                segments.push(records[start].segment_id.clone());
                offsets.push((start, i));
                start = i;
            }
        }
        let period_range = records
            .iter()
            .map(|r| r.period)
            .min()
            .zip(records.iter().map(|r| r.period).max());
        Ok(SubscriptionPanel {
            records,
            segments,
            offsets,
            period_range,
            schema,
            prepared,
        })
    }

    fn empty_like(&self) -> Self {
        SubscriptionPanel {
            records: Vec::new(),
            segments: Vec::new(),
            offsets: Vec::new(),
            period_range: None,
            schema: self.schema.clone(),
            prepared: self.prepared,
        }
    }

    /// Records with `lo <= period <= hi`. The result may be empty.
    pub fn filter_periods(&self, lo: i64, hi: i64) -> Self {
        let kept: Vec<_> = self
            .records
            .iter()
            .filter(|r| r.period >= lo && r.period <= hi)
            .cloned()
            .collect();
        if kept.is_empty() {
            return self.empty_like();
        }
        Self::assemble(kept, self.schema.clone(), self.prepared).expect("subset of a valid panel")
    }

    /// Keeps only the listed segments.
    pub fn filter_segments(&self, keep: &[String]) -> Self {
        let keep: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
        let kept: Vec<_> = self
            .records
            .iter()
            .filter(|r| keep.contains(r.segment_id.as_str()))
            .cloned()
            .collect();
        if kept.is_empty() {
            return self.empty_like();
        }
        Self::assemble(kept, self.schema.clone(), self.prepared).expect("subset of a valid panel")
    }

    /// A new panel with `extra` records appended (duplicates are rejected).
    pub fn extend(&self, extra: Vec<SubscriptionRecord>) -> Result<Self> {
        let mut all = self.records.clone();
        all.extend(extra);
        Self::assemble(all, self.schema.clone(), self.prepared)
    }

    pub fn records(&self) -> &[SubscriptionRecord] {
        &self.records
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn period_range(&self) -> Option<(i64, i64)> {
        self.period_range
    }

    /// Number of distinct period indices covered, `max - min + 1`.
    pub fn period_span(&self) -> usize {
        self.period_range
            .map_or(0, |(lo, hi)| (hi - lo + 1) as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_prepared(&self) -> bool {
        self.prepared
    }

    pub fn segment_records(&self, segment: &str) -> Result<&[SubscriptionRecord]> {
        let idx = self
            .segments
            .binary_search_by(|s| s.as_str().cmp(segment))
            .map_err(|_| Error::UnknownSegment(segment.to_string()))?;
        let (a, b) = self.offsets[idx];
        Ok(&self.records[a..b])
    }

    pub fn iter_segments(&self) -> impl Iterator<Item = (&str, &[SubscriptionRecord])> {
        self.segments
            .iter()
            .zip(&self.offsets)
            .map(|(s, &(a, b))| (s.as_str(), &self.records[a..b]))
    }

    /// Carries the last observed value forward within each segment for the
    /// named features. Used to align low-frequency covariates onto a finer
    /// period index.
    pub fn forward_fill(&self, features: &[&str]) -> Result<Self> {
        for f in features {
            if self.schema.kind_of(f).is_none() {
                return Err(Error::SchemaMismatch(format!(
                    "cannot forward-fill unknown feature `{f}`"
                )));
            }
        }
        let mut records = self.records.clone();
        for &(a, b) in &self.offsets {
            for f in features {
                let mut last: Option<FeatureValue> = None;
                for rec in &mut records[a..b] {
                    let slot = rec.covariates.get_mut(*f).expect("schema-conformant");
                    if slot.is_missing() {
                        if let Some(v) = &last {
                            *slot = v.clone();
                        }
                    } else {
                        last = Some(slot.clone());
                    }
                }
            }
        }
        Self::assemble(records, self.schema.clone(), self.prepared)
    }
}

// ---------------------------------------------------------------------------
// CSV format
// ---------------------------------------------------------------------------

const RESERVED_COLUMNS: [&str; 7] = [
    "segment_id",
    "period",
    "price",
    "quantity",
    "unit_cost",
    "churned",
    "tenure",
];

/// Writes the panel as CSV: the fixed columns followed by the covariates in
/// schema order. Missing values are empty fields.
pub fn write_csv<W: Write>(panel: &SubscriptionPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = RESERVED_COLUMNS.to_vec();
    header.extend(panel.schema.names());
    w.write_record(&header)?;
    for r in &panel.records {
        let mut row = vec![
            r.segment_id.clone(),
            r.period.to_string(),
            r.price.to_string(),
            r.quantity.to_string(),
            r.unit_cost.to_string(),
            r.churned.to_string(),
            r.tenure.to_string(),
        ];
        for name in panel.schema.names() {
            row.push(match &r.covariates[name] {
                FeatureValue::Num(v) => v.to_string(),
                FeatureValue::Cat(s) => s.clone(),
                FeatureValue::Missing => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R, schema: FeatureSchema) -> Result<SubscriptionPanel> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut expected: Vec<String> = RESERVED_COLUMNS.iter().map(|s| s.to_string()).collect();
    expected.extend(schema.names().map(str::to_string));
    if header != expected {
        return Err(Error::SchemaMismatch(format!(
            "CSV header {header:?} does not match expected {expected:?}"
        )));
    }
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_err = |col: &str, e: &dyn std::fmt::Display| {
            Error::InvalidRecord(format!("row {}: column `{col}`: {e}", line + 2))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| parse_err(RESERVED_COLUMNS[i], &e))
        };
        let count = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|e| parse_err(RESERVED_COLUMNS[i], &e))
        };
        let mut covariates = BTreeMap::new();
        for (k, spec) in schema.features.iter().enumerate() {
            let raw = field(RESERVED_COLUMNS.len() + k);
            let value = if raw.is_empty() {
                FeatureValue::Missing
            } else {
                match spec.kind {
                    FeatureKind::Numeric => FeatureValue::Num(
                        raw.parse::<f64>().map_err(|e| parse_err(&spec.name, &e))?,
                    ),
                    FeatureKind::Categorical => FeatureValue::Cat(raw.to_string()),
                }
            };
            covariates.insert(spec.name.clone(), value);
        }
        records.push(SubscriptionRecord {
            segment_id: field(0).to_string(),
            period: field(1)
                .parse::<i64>()
                .map_err(|e| parse_err("period", &e))?,
            price: num(2)?,
            quantity: count(3)?,
            unit_cost: num(4)?,
            churned: count(5)?,
            tenure: num(6)?,
            covariates,
        });
    }
    build_panel(records, schema)
}

pub fn write_csv_file(panel: &SubscriptionPanel, path: impl AsRef<Path>) -> Result<()> {
    write_csv(panel, std::fs::File::create(path)?)
}

pub fn read_csv_file(path: impl AsRef<Path>, schema: FeatureSchema) -> Result<SubscriptionPanel> {
    read_csv(std::fs::File::open(path)?, schema)
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeStrategy {
    Median,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleStrategy {
    Robust,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodeStrategy {
    Target,
    Onehot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub impute_strategy: ImputeStrategy,
    pub scale_strategy: ScaleStrategy,
    pub encode_strategy: EncodeStrategy,
    pub target_smoothing: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            impute_strategy: ImputeStrategy::Median,
            scale_strategy: ScaleStrategy::Robust,
            encode_strategy: EncodeStrategy::Target,
            target_smoothing: 10.0,
        }
    }
}

/// Per-feature numeric transform: impute, then `(x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericTransform {
    pub fill: f64,
    pub center: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase")]
pub enum CategoricalTransform {
    /// Smoothed mean churn rate per level; unseen and missing levels map to `default`.
    Target {
        levels: BTreeMap<String, f64>,
        default: f64,
    },
    /// One indicator column per level, named `feature=level`.
    Onehot { levels: Vec<String> },
}

/// Fitted transformation parameters, reusable on other panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepParams {
    pub numeric: BTreeMap<String, NumericTransform>,
    pub categorical: BTreeMap<String, CategoricalTransform>,
}

/// Fits imputation, robust scaling and categorical encoding, then applies
/// them. When `fit_span` is given the parameters are estimated on its
/// training periods only.
pub fn preprocess(
    panel: &SubscriptionPanel,
    cfg: &PrepConfig,
    fit_span: Option<&SplitSpec>,
) -> Result<(SubscriptionPanel, PrepParams)> {
    if !(cfg.target_smoothing.is_finite() && cfg.target_smoothing >= 0.0) {
        return Err(Error::config("target_smoothing must be finite and >= 0"));
    }
    if panel.prepared {
        return Err(Error::config("panel is already preprocessed"));
    }
    let fit_records: Vec<&SubscriptionRecord> = match fit_span {
        Some(spec) => {
            let (lo, _) = panel
                .period_range
                .ok_or_else(|| Error::EmptyInput("empty panel".into()))?;
            spec.check(panel.period_span())?;
            let train_end = lo + spec.train_periods as i64 - 1;
            panel
                .records
                .iter()
                .filter(|r| r.period <= train_end)
                .collect()
        }
        None => panel.records.iter().collect(),
    };

    let mut params = PrepParams {
        numeric: BTreeMap::new(),
        categorical: BTreeMap::new(),
    };
    let global_rate = stats::mean(
        &fit_records
            .iter()
            .map(|r| r.churn_rate())
            .collect::<Vec<_>>(),
    );
    for spec in &panel.schema.features {
        match spec.kind {
            FeatureKind::Numeric => {
                let observed: Vec<f64> = fit_records
                    .iter()
                    .filter_map(|r| r.covariates[&spec.name].as_num())
                    .collect();
                if observed.is_empty() {
                    return Err(Error::EmptyFeature(spec.name.clone()));
                }
                let fill = match cfg.impute_strategy {
                    ImputeStrategy::Median => stats::median(&observed),
                    ImputeStrategy::Zero => 0.0,
                };
                let (center, scale) = match cfg.scale_strategy {
                    ScaleStrategy::Robust => {
                        let filled: Vec<f64> = fit_records
                            .iter()
                            .map(|r| r.covariates[&spec.name].as_num().unwrap_or(fill))
                            .collect();
                        let iqr = stats::iqr(&filled);
                        (stats::median(&filled), if iqr > 0.0 { iqr } else { 1.0 })
                    }
                    ScaleStrategy::None => (0.0, 1.0),
                };
                params.numeric.insert(
                    spec.name.clone(),
                    NumericTransform {
                        fill,
                        center,
                        scale,
                    },
                );
            }
            FeatureKind::Categorical => {
                let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
                for r in &fit_records {
                    if let FeatureValue::Cat(level) = &r.covariates[&spec.name] {
                        let e = sums.entry(level.clone()).or_insert((0.0, 0.0));
                        e.0 += r.churn_rate();
                        e.1 += 1.0;
                    }
                }
                if sums.is_empty() {
                    return Err(Error::EmptyFeature(spec.name.clone()));
                }
                let t = match cfg.encode_strategy {
                    EncodeStrategy::Target => {
                        let s = cfg.target_smoothing;
                        let levels = sums
                            .into_iter()
                            .map(|(lvl, (sum, n))| (lvl, (sum + s * global_rate) / (n + s)))
                            .collect();
                        CategoricalTransform::Target {
                            levels,
                            default: global_rate,
                        }
                    }
                    EncodeStrategy::Onehot => CategoricalTransform::Onehot {
                        levels: sums.into_keys().collect(),
                    },
                };
                params.categorical.insert(spec.name.clone(), t);
            }
        }
    }
    let out = params.apply(panel)?;
    Ok((out, params))
}

impl PrepParams {
    /// Applies stored parameters. A panel that has already been transformed
    /// is returned unchanged.
    pub fn apply(&self, panel: &SubscriptionPanel) -> Result<SubscriptionPanel> {
        if panel.prepared {
            return Ok(panel.clone());
        }
        let mut out_schema = Vec::new();
        for spec in &panel.schema.features {
            match spec.kind {
                FeatureKind::Numeric => {
                    if !self.numeric.contains_key(&spec.name) {
                        return Err(Error::SchemaMismatch(format!(
                            "no transform for `{}`",
                            spec.name
                        )));
                    }
                    out_schema.push((spec.name.clone(), FeatureKind::Numeric));
                }
                FeatureKind::Categorical => match self.categorical.get(&spec.name) {
                    Some(CategoricalTransform::Target { .. }) => {
                        out_schema.push((spec.name.clone(), FeatureKind::Numeric))
                    }
                    Some(CategoricalTransform::Onehot { levels }) => {
                        for l in levels {
                            out_schema.push((format!("{}={l}", spec.name), FeatureKind::Numeric));
                        }
                    }
                    None => {
                        return Err(Error::SchemaMismatch(format!(
                            "no transform for `{}`",
                            spec.name
                        )))
                    }
                },
            }
        }
        let records = panel
            .records
            .iter()
            .map(|r| {
                let mut cov = BTreeMap::new();
                for spec in &panel.schema.features {
                    let v = &r.covariates[&spec.name];
                    if let Some(t) = self.numeric.get(&spec.name) {
                        let x = v.as_num().unwrap_or(t.fill);
                        cov.insert(
                            spec.name.clone(),
                            FeatureValue::Num((x - t.center) / t.scale),
                        );
                        continue;
                    }
                    match &self.categorical[&spec.name] {
                        CategoricalTransform::Target { levels, default } => {
                            let enc = match v {
                                FeatureValue::Cat(l) => levels.get(l).copied().unwrap_or(*default),
                                _ => *default,
                            };
                            cov.insert(spec.name.clone(), FeatureValue::Num(enc));
                        }
                        CategoricalTransform::Onehot { levels } => {
                            for l in levels {
                                let hit = matches!(v, FeatureValue::Cat(x) if x == l);
                                cov.insert(
                                    format!("{}={l}", spec.name),
                                    FeatureValue::Num(if hit { 1.0 } else { 0.0 }),
                                );
                            }
                        }
                    }
                }
                SubscriptionRecord {
                    covariates: cov,
                    ..r.clone()
                }
            })
            .collect();
        SubscriptionPanel::assemble(records, FeatureSchema::new(out_schema), true)
    }
}

// ---------------------------------------------------------------------------
// Chronological split
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_periods: usize,
    pub val_periods: usize,
    pub test_periods: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_periods: 12,
            val_periods: 3,
            test_periods: 3,
        }
    }
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.train_periods + self.val_periods + self.test_periods
    }

    pub fn check(&self, span: usize) -> Result<()> {
        if self.train_periods == 0 || self.test_periods == 0 {
            return Err(Error::SpanTooShort(
                "train and test spans must be positive".into(),
            ));
        }
        if self.total() > span {
            return Err(Error::SpanTooShort(format!(
                "split needs {} periods but the panel spans {span}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Splits the first `train + val + test` periods of the panel into three
/// contiguous, non-overlapping partitions.
pub fn chronological_split(
    panel: &SubscriptionPanel,
    spec: &SplitSpec,
) -> Result<(SubscriptionPanel, SubscriptionPanel, SubscriptionPanel)> {
    spec.check(panel.period_span())?;
    let (lo, _) = panel.period_range.expect("non-empty after span check");
    let t_end = lo + spec.train_periods as i64 - 1;
    let v_end = t_end + spec.val_periods as i64;
    let s_end = v_end + spec.test_periods as i64;
    Ok((
        panel.filter_periods(lo, t_end),
        panel.filter_periods(t_end + 1, v_end),
        panel.filter_periods(v_end + 1, s_end),
    ))
}

// ---------------------------------------------------------------------------
// Segment series
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub period: i64,
    pub price: f64,
    pub quantity: f64,
    pub unit_cost: f64,
    pub tenure: f64,
    /// Numeric covariates in `SegmentSeries::covariate_names` order; NaN when missing.
    pub covariates: Vec<f64>,
    pub churn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSeries {
    pub segment: String,
    pub covariate_names: Vec<String>,
    pub points: Vec<SeriesPoint>,
}

impl SegmentSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quantity).collect()
    }

    pub fn covariate_rows(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.covariates.clone()).collect()
    }

    /// First `n` points.
    pub fn head(&self, n: usize) -> SegmentSeries {
        SegmentSeries {
            points: self.points[..n.min(self.points.len())].to_vec(),
            ..self.clone()
        }
    }
}

/// Per-period series of one segment. With `horizon`, only the latest
/// `horizon` periods are kept. Categorical covariates are skipped.
pub fn aggregate_segment(
    panel: &SubscriptionPanel,
    segment: &str,
    horizon: Option<usize>,
) -> Result<SegmentSeries> {
    let recs = panel.segment_records(segment)?;
    let names = panel.schema.numeric_names();
    let skip = horizon.map_or(0, |h| recs.len().saturating_sub(h));
    let points = recs[skip..]
        .iter()
        .map(|r| SeriesPoint {
            period: r.period,
            price: r.price,
            quantity: r.quantity as f64,
            unit_cost: r.unit_cost,
            tenure: r.tenure,
            covariates: names
                .iter()
                .map(|n| r.covariates[n].as_num().unwrap_or(f64::NAN))
                .collect(),
            churn_rate: r.churn_rate(),
        })
        .collect();
    Ok(SegmentSeries {
        segment: segment.to_string(),
        covariate_names: names,
        points,
    })
}
