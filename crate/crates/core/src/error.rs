use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue = {0:e})")]
    NotPsd(f64),
    #[error("trace is not one (|Tr - 1| = {0:e})")]
    TraceNotOne(f64),
    #[error("keep set is empty")]
    EmptyKeepSet,
    #[error("subsystem index {index} out of range for {n} subsystems")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("states have different subsystem layouts")]
    LayoutMismatch,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("need at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("state has a single subsystem; no nontrivial partition exists")]
    SingleSubsystem,
    #[error("{n} subsystems exceeds the search cap of {cap}")]
    SearchBudgetExceeded { n: usize, cap: usize },
    #[error("recovery sets overlap or are empty")]
    DisjointnessViolation,
    #[error("Petz recovery lost trace ({0:e}); support is too degenerate")]
    SupportBreakdown(f64),
    #[error("blanket size {size} must lie in 1..={max}")]
    BadSize { size: usize, max: usize },
    #[error("evaluation budget must be at least 1")]
    BadBudget,
    #[error("grid has {points} points, cap is {cap}")]
    GridTooLarge { points: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// Coarse error class, used by front ends to pick exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NumericalBreakdown(_) | Error::SupportBreakdown(_) => ErrorClass::Numeric,
            Error::SearchBudgetExceeded { .. } | Error::BadBudget | Error::GridTooLarge { .. } => {
                ErrorClass::Budget
            }
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Budget,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
