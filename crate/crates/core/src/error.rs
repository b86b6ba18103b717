use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("tropical power of bottom with negative exponent {0} is undefined")]
    UndefinedPower(i64),

    #[error("tropical division by bottom is undefined")]
    DivisionByBottom,

    #[error("polynomial evaluates to bottom (no finite monomial)")]
    BottomValued,

    #[error("polynomial must contain at least one monomial")]
    EmptyPolynomial,

    #[error("negative weight {weight} at position {index}; tropical powers need nonnegative integer weights")]
    NegativeWeight { index: usize, weight: i64 },

    #[error("monomial count {count} exceeds cap {cap} after pruning; use numeric mode instead")]
    Capacity { count: usize, cap: usize },

    #[error("LP solve failed for monomial {monomial}: {reason}")]
    NumericalInfeasibility { monomial: usize, reason: String },

    #[error("region counting supports dimension 1..=3, got {0}")]
    UnsupportedDimension(usize),

    #[error("distribution at {path} is unbounded or malformed: {reason}")]
    Unbounded { path: String, reason: String },

    #[error("non-integer weight draw {value} at {path}")]
    NonIntegerWeight { path: String, value: f64 },

    #[error("invalid specification at {path}: {reason}")]
    InvalidSpec { path: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample set is empty")]
    EmptySample,

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("estimate equals the decision threshold {0}; the point lies on the expected decision boundary")]
    OnDecisionBoundary(f64),

    #[error("loss is zero at layer {layer}; reciprocal utility diverges")]
    InfiniteUtility { layer: usize },

    #[error("gamma process is not integrable: {0}")]
    NotIntegrable(String),

    #[error("exhaustive enumeration would visit {count} rules (limit {limit})")]
    StateExplosion { count: u128, limit: u128 },

    #[error("config error at {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("missing artifact {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::UndefinedPower(_) => "undefined-power",
            Error::DivisionByBottom => "division-by-bottom",
            Error::BottomValued => "bottom-valued",
            Error::EmptyPolynomial => "empty-polynomial",
            Error::NegativeWeight { .. } => "negative-weight",
            Error::Capacity { .. } => "capacity",
            Error::NumericalInfeasibility { .. } => "numerical-infeasibility",
            Error::UnsupportedDimension(_) => "unsupported-dimension",
            Error::Unbounded { .. } => "unbounded",
            Error::NonIntegerWeight { .. } => "non-integer-weight",
            Error::InvalidSpec { .. } => "invalid-spec",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::EmptySample => "empty-sample",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::OnDecisionBoundary(_) => "on-decision-boundary",
            Error::InfiniteUtility { .. } => "infinite-utility",
            Error::NotIntegrable(_) => "not-integrable",
            Error::StateExplosion { .. } => "state-explosion",
            Error::Config { .. } => "config",
            Error::MissingArtifact(_) => "missing-artifact",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Field path of the offending config or spec entry, when known.
    pub fn field_path(&self) -> Option<&str> {
        match self {
            Error::Unbounded { path, .. }
            | Error::NonIntegerWeight { path, .. }
            | Error::InvalidSpec { path, .. }
            | Error::Config { path, .. } => Some(path),
            _ => None,
        }
    }

    pub(crate) fn spec(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
