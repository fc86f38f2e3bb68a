use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid with {points} points per axis cannot resolve frequency radius {radius} (need points > 2 * radius)")]
    Aliasing { radius: usize, points: usize },

    #[error("sample array has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("multi-index entries must be non-negative, got {0:?}")]
    NegativeMultiIndex(Vec<i64>),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("no dyadic annuli exist at scale {scale} in dimension {dim}")]
    NoAnnuli { scale: f64, dim: usize },

    #[error("atom construction failed after {attempts} attempts: {reason}")]
    AtomConstruction { attempts: usize, reason: String },

    #[error("cancellation violated: |integral| = {residual:e} exceeds {tolerance:e}")]
    CancellationViolated { residual: f64, tolerance: f64 },

    #[error("molecule window violated: {0}")]
    MoleculeWindow(String),

    #[error("unknown symbol spec `{0}`")]
    UnknownSymbol(String),

    #[error("malformed symbol spec `{spec}`: {reason}")]
    MalformedSymbol { spec: String, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
