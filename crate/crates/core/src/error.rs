use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NonHermitian { defect: f64 },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid assemblage: {0}")]
    InvalidAssemblage(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("assemblage element ({a}, {x}) has weight {weight:e} outside the support of the reduced state")]
    SupportViolation { a: usize, x: usize, weight: f64 },
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("reduced state of the assemblage differs from the GNS state by {0:e}")]
    StateMismatch(f64),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("setting index {setting} out of range for {settings} settings")]
    BadSetting { setting: usize, settings: usize },
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error("expected {expected} outcomes, found {found}")]
    WrongOutcomeCount { expected: usize, found: usize },
    #[error("scenario too large: {vertices} deterministic strategies (limit {limit})")]
    ScenarioTooLarge { vertices: u128, limit: u128 },
    #[error("reflection dimension {0} is odd")]
    OddDimension(usize),
    #[error("hierarchy level must be at least 1")]
    InvalidLevel,
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
