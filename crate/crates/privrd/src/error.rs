use thiserror::Error;

/// Errors produced by the library.
///
/// Domain errors describe a statistical situation in which an estimator or
/// mechanism is undefined. Input errors describe arguments that violate a
/// documented precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no observation with positive kernel weight on the {side} side of the cutoff")]
    EmptySide { side: &'static str },

    #[error("weighted design matrix on the {side} side is singular (condition number {condition:.3e})")]
    SingularDesign { side: &'static str, condition: f64 },

    #[error("first-stage jump {jump:.3e} is too small for the fuzzy ratio")]
    WeakFirstStage { jump: f64 },

    #[error("estimated propensity score is {value} at x = {x}")]
    DegeneratePropensity { x: f64, value: f64 },

    #[error("calibrated noise requires finite global sensitivity, got {kind}")]
    InfiniteSensitivity { kind: String },

    #[error("value {value} of field `{field}` lies outside its support [{lo}, {hi}]")]
    SupportViolation { field: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("datasets differ in {differing} records; adjacency requires at most one")]
    AdjacencyViolation { differing: usize },

    #[error("enumeration needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("regime is not classified: {reason}")]
    Unclassified { reason: String },

    #[error("estimated density on the {side} side is not positive ({value})")]
    NonpositiveDensity { side: &'static str, value: f64 },

    #[error("realization [{lo}, {hi}] does not have exactly one endpoint near the boundary")]
    AmbiguousRealization { lo: f64, hi: f64 },

    #[error("no region [z, 1-z] of posterior mass {mass} contains t = {t}")]
    FormInfeasible { t: f64, mass: f64 },

    #[error("normal system is singular (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySide { .. } => "EmptySide",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::WeakFirstStage { .. } => "WeakFirstStage",
            Error::DegeneratePropensity { .. } => "DegeneratePropensity",
            Error::InfiniteSensitivity { .. } => "InfiniteSensitivity",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::AdjacencyViolation { .. } => "AdjacencyViolation",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::Unclassified { .. } => "Unclassified",
            Error::NonpositiveDensity { .. } => "NonpositiveDensity",
            Error::AmbiguousRealization { .. } => "AmbiguousRealization",
            Error::FormInfeasible { .. } => "FormInfeasible",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    /// True for errors caused by malformed arguments or files rather than by
    /// the data.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
