use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("metric a has wrong signature at x = {0:?}")]
    Signature(Vec<f64>),
    #[error("c = {c} outside (0, 1] at x = {x:?}")]
    CRange { c: f64, x: Vec<f64> },
    #[error("|g| = {0} must be below 2 for space-like evaluation")]
    ChargeRange(f64),
    #[error("vector lies in an unsupported sector")]
    UnsupportedSector,
    #[error("q below q_min (vector too close to the b axis)")]
    DegenerateQ,
    #[error("nu below nu_min")]
    DegenerateNu,
    #[error("operation requires c = 1 (got c = {0})")]
    CNotUnit(f64),
    #[error("operation requires N = {expected} (got {got})")]
    Dimension { expected: usize, got: usize },
    #[error("vectors lie in different sectors")]
    MixedSectors,
    #[error("inverse trigonometric argument {0} outside its domain")]
    DomainError(f64),
    #[error("covector is not admissible")]
    UnsupportedCovector,
    #[error("Newton iteration did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("trajectory left the supported sector at s = {0}")]
    SectorExit(f64),
    #[error("adaptive step underflow at s = {0}")]
    StepUnderflow(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
