//! Agent-based simulator of a multi-stock equity market.
//!
//! Prices are endogenous: every day each participant turns its view of public
//! fundamentals into portfolio weights, weights become hyperbolic excess
//! demand functions, and a per-stock market clearing finds the price at which
//! demand absorbs the fixed share supply. The loop is
//!
//! fundamentals -> scores -> signals -> demand -> clearing -> investment
//! flows -> cash flows -> solvency,
//!
//! repeated for a configured number of trading days (252 per year, 63 per
//! quarter).
//!
//! Participants follow the major mutual-fund styles — Value, Growth, Blend,
//! cap-weighted Index, a noise-trading Retail aggregate, and an optional
//! user-programmed Strategy fund for testing trading rules against the
//! endogenous market.
//!
//! The `validation` module measures the statistical signature of simulated
//! prices (return autocorrelation, heavy tails, volatility clustering,
//! leverage effect, volume/volatility correlation) so runs can be judged
//! against the behaviour of real markets.

pub mod agents;
pub mod charts;
pub mod clearing;
pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod flows;
pub mod output;
pub mod scoring;
pub mod validation;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
