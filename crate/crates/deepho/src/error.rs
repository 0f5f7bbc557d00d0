use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("simplex budget exceeded: {needed} simplices needed, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("window policy violation: S = {s} but R_max = {r_max} requires S >= {required}")]
    WindowPolicy { s: i64, r_max: u32, required: i64 },

    #[error("vertex {coords:?} outside window of half-width {s}")]
    OutOfWindow { coords: [i64; 3], s: i64 },

    #[error("chain is not a cycle in degree {dim}: boundary has {nonzero} nonzero terms")]
    NotACycle { dim: usize, nonzero: usize },

    #[error("chain map fill failed for simplex {dim}#{id}: no local solution up to radius {radius}")]
    FillFailed { dim: usize, id: u32, radius: u32 },

    #[error("map does not respect the relative structure: cell {dim}#{id} escapes the divisor")]
    RelativeStructure { dim: usize, id: u32 },

    #[error("neighborhood filtration exhausted the window at R = {r}: no complement survives")]
    FiltrationExhausted { r: u32 },

    #[error("expected an isomorphism but {what} is not invertible")]
    NotInvertible { what: String },

    #[error("inverse system verdict is {verdict}, cannot take a stable limit")]
    UnstableLimit { verdict: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema version {found} unsupported (expected {expected})")]
    Schema { found: u64, expected: u64 },

    #[error("replay mismatch in field {field}: {detail}")]
    ReplayMismatch { field: String, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
