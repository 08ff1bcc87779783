//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid droplet corners ({0}, {1})..({2}, {3})")]
    InvalidDroplet(i64, i64, i64, i64),
    #[error("site ({0}, {1}) outside droplet")]
    SiteOutsideDroplet(i64, i64),
    #[error("critical window [gamma/2, gamma] contains no droplet semi-perimeter (gamma = {0})")]
    WindowEmpty(f64),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("droplet is not an M-slab: lg = {lg}, sh = {sh}, p = {p}")]
    SlabShape { lg: u64, sh: u64, p: f64 },
    #[error("scale undefined: {0}")]
    ScaleUndefined(String),
    #[error("bisection bracket not found: P({lo}) = {p_lo:.4}, P({hi}) = {p_hi:.4}")]
    BracketNotFound { lo: u64, hi: u64, p_lo: f64, p_hi: f64 },
    #[error("event evaluator failed monotonicity spot-check: {0}")]
    NotMonotone(String),
    #[error("grid too large for text rendering ({0}x{1}); use the binary format")]
    GridTooLarge(usize, usize),
    #[error("malformed grid data: {0}")]
    BadGridData(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("experiment reported failure: {0}")]
    ExperimentFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
