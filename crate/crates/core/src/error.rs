//! Crate-wide error type.
//!
//! One enum covers the whole pipeline so callers can match on failure class
//! without juggling per-module error types. Variants carry enough context
//! (row numbers, stock ids, solver bounds) to diagnose a failure from the
//! message alone.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- data ---
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("fundamentals header mismatch: expected columns {expected:?}, found {found:?}")]
    SchemaHeader {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}: bad value in column `{column}`: {reason}")]
    BadValue {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("duplicate fundamentals record for stock `{stock_id}` quarter {quarter}")]
    DuplicateRecord { stock_id: String, quarter: u32 },
    #[error("stock `{stock_id}` is missing quarter 0 (needed for initial price and share count)")]
    MissingQuarterZero { stock_id: String },
    #[error("stock `{stock_id}` has a gap in quarters: expected {expected}, found {found}")]
    NonContiguousQuarters {
        stock_id: String,
        expected: u32,
        found: u32,
    },
    #[error("fundamentals table contains no stocks")]
    EmptyTable,

    // --- config ---
    #[error("config error: {0}")]
    Config(String),

    // --- clearing ---
    #[error(
        "clearing failed for stock {stock}: no sign change in [{lo}, {hi}] after {expansions} bracket expansions (g({lo}) = {g_lo}, g({hi}) = {g_hi})"
    )]
    BracketFailure {
        stock: usize,
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        expansions: u32,
    },
    #[error("clearing solver did not converge for stock {stock}: residual {residual} after {iterations} iterations")]
    SolverDiverged {
        stock: usize,
        residual: f64,
        iterations: u32,
    },
    #[error(
        "solver price {solver} disagrees with closed form {closed_form} for stock {stock} (relative error {rel_err})"
    )]
    ClosedFormMismatch {
        stock: usize,
        solver: f64,
        closed_form: f64,
        rel_err: f64,
    },

    // --- engine ---
    #[error("share conservation violated for stock {stock} on day {day}: |sum - supply| = {error} exceeds tolerance {tolerance}")]
    ConservationViolated {
        stock: usize,
        day: u32,
        error: f64,
        tolerance: f64,
    },
    #[error("all participants insolvent on day {day}; simulation terminated")]
    AllInsolvent { day: u32 },
    #[error("engine error on day {day}: {reason}")]
    Engine { day: u32, reason: String },

    // --- strategy harness ---
    #[error("unknown strategy `{name}`; built-ins: {available}")]
    UnknownStrategy { name: String, available: String },
    #[error("strategy references unknown stock id `{stock_id}`")]
    UnknownStockId { stock_id: String },

    // --- validation ---
    #[error("insufficient data: {needed} observations required, {got} provided")]
    InsufficientData { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
