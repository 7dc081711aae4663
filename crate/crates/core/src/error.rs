//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- panel ---------------------------------------------------------------
    #[error("duplicate record for segment `{segment}` at period {period}")]
    DuplicateKey { segment: String, period: i64 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("feature `{0}` has no observed values")]
    EmptyFeature(String),
    #[error("span too short: {0}")]
    SpanTooShort(String),
    #[error("unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("empty input: {0}")]
    EmptyInput(String),

    // -- forecast ------------------------------------------------------------
    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("horizon mismatch: expected {expected} covariate rows, got {got}")]
    HorizonMismatch { expected: usize, got: usize },
    #[error("actual value is zero at index {0}; MAPE undefined")]
    ZeroActual(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    // -- elasticity ----------------------------------------------------------
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("non-positive data: {0}")]
    NonPositiveData(String),
    #[error("collinear prices: corr({0}, {1}) = {2:.4}")]
    CollinearPrices(String, String, f64),

    // -- churn ---------------------------------------------------------------
    #[error("labeling window of {window} periods does not fit a span of {span}")]
    WindowTooLong { window: usize, span: usize },
    #[error("churn data contains a single class")]
    SingleClass,

    // -- optimizer -----------------------------------------------------------
    #[error("missing estimate: {0}")]
    MissingEstimate(String),
    #[error("incoherent bounds for segment `{segment}`: {detail}")]
    IncoherentBounds { segment: String, detail: String },
    #[error("grid oracle supports at most 3 segments, got {0}")]
    TooManyDimensions(usize),

    // -- synthgen / risk -----------------------------------------------------
    #[error("schedule has no price for segment `{0}`")]
    MissingSegmentPrice(String),
    #[error("unknown scenario kind `{0}`")]
    UnknownScenarioKind(String),

    // -- governance / backtest -----------------------------------------------
    #[error("segment mismatch: {0}")]
    SegmentMismatch(String),
    #[error("audit storage failure: {0}")]
    StorageFailure(String),
    #[error("invalid approval transition: {0}")]
    InvalidTransition(String),
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("strategy list has no static_tiered baseline")]
    NoBaseline,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
