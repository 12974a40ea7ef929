//! Run configuration: a versioned TOML schema mirroring the engine's knobs.
//!
//! Every section has defaults, so a minimal config is just
//!
//! ```toml
//! schema_version = 1
//!
//! [data.synthetic]
//! n_stocks = 21
//! ```
//!
//! Unknown keys are rejected rather than ignored — a typo in a parameter
//! name must not silently run the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::RetailConfig;
use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::flows::{CashFlowConfig, FlowConfig};

/// The schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Complete configuration of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub participants: ParticipantConfig,
    #[serde(default)]
    pub retail: RetailConfig,
    #[serde(default)]
    pub flows: FlowConfig,
    #[serde(default)]
    pub cash: CashFlowConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Length, seeding, and labeling of the run itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Trading days to simulate.
    pub t_max: usize,
    /// Root RNG seed; all randomness in a run derives from it.
    pub seed: u64,
    /// Days labeled as warm-up in the output manifest. Nothing is discarded
    /// here; downstream analysis decides what to do with the label.
    pub burn_in: usize,
    /// Clear stocks on a thread pool. Purely a speed knob: output is
    /// byte-identical either way.
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { t_max: 2520, seed: 42, burn_in: 252, parallel: false }
    }
}

/// Where fundamentals come from: a CSV on disk or a synthetic universe.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Path to a fundamentals CSV (relative paths resolve against the
    /// config file's directory).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

/// Parameters of a generated universe; unset fields are derived from the
/// run section at load time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_stocks: usize,
    /// Defaults to enough quarters to cover `t_max` plus one year of
    /// reporting history before day 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_quarters: Option<u32>,
    /// Defaults to the run seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { n_stocks: 21, n_quarters: None, seed: None }
    }
}

impl SyntheticSpec {
    /// Fills derived fields from the run section.
    pub fn resolve(&self, run: &RunConfig) -> SynthConfig {
        SynthConfig {
            n_stocks: self.n_stocks,
            n_quarters: self
                .n_quarters
                .unwrap_or((run.t_max / crate::data::QUARTER_DAYS as usize) as u32 + 6),
            seed: self.seed.unwrap_or(run.seed),
        }
    }
}

/// The participant roster: wealth split, leverage, and style parameters.
///
/// The six base shares must sum to 1. International funds hold no book of
/// their own: at initialization their share is folded one-third each into
/// the Value, Blend, and Growth aggregates. The strategy fund only exists
/// when a rule is configured; its share is then carved out of every other
/// participant pro-rata, so the roster still sums to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticipantConfig {
    pub value_share: f64,
    pub blend_share: f64,
    pub growth_share: f64,
    /// Index mutual funds and ETFs combined (they trade identically).
    pub index_share: f64,
    pub international_share: f64,
    pub retail_share: f64,
    /// Strategy-fund share of total wealth when a rule is enabled.
    pub strategy_share: f64,
    /// Budget multiple of wealth; 1 = unlevered.
    pub lambda: f64,
    /// Aggressiveness of demand toward the target position, in (0, 1].
    pub beta: f64,
    /// Portfolio breadth of the Value and Growth styles.
    pub top_k: usize,
    /// Portfolio breadth of the Blend style; must be even (k/2 from each
    /// score).
    pub blend_k: usize,
    /// Initial cash per participant as a fraction of its initial position
    /// value.
    pub cash_buffer: f64,
}

impl Default for ParticipantConfig {
    fn default() -> Self {
        ParticipantConfig {
            value_share: 0.15,
            blend_share: 0.15,
            growth_share: 0.15,
            index_share: 0.0,
            international_share: 0.10,
            retail_share: 0.45,
            strategy_share: 0.001,
            lambda: 1.0,
            beta: 1.0,
            top_k: 7,
            blend_k: 8,
            cash_buffer: 0.02,
        }
    }
}

impl ParticipantConfig {
    /// The six base shares (strategy excluded).
    pub fn base_shares(&self) -> [f64; 6] {
        [
            self.value_share,
            self.blend_share,
            self.growth_share,
            self.index_share,
            self.international_share,
            self.retail_share,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("value_share", self.value_share),
            ("blend_share", self.blend_share),
            ("growth_share", self.growth_share),
            ("index_share", self.index_share),
            ("international_share", self.international_share),
            ("retail_share", self.retail_share),
            ("strategy_share", self.strategy_share),
        ] {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        let total: f64 = self.base_shares().iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "participant wealth shares must sum to 1 (got {total})"
            )));
        }
        if self.strategy_share >= 0.5 {
            return Err(Error::Config("strategy_share must be below 0.5".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 1.0 {
            return Err(Error::Config("lambda must be finite and >= 1".into()));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta > 1.0 {
            return Err(Error::Config("beta must lie in (0, 1]".into()));
        }
        if self.top_k < 1 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.blend_k < 2 || self.blend_k % 2 != 0 {
            return Err(Error::Config("blend_k must be even and at least 2".into()));
        }
        if !self.cash_buffer.is_finite() || self.cash_buffer < 0.0 {
            return Err(Error::Config("cash_buffer must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Strategy-fund selection. The rule string names a built-in
/// (`buy_and_hold:<stock_id>`, `top_value:<k>`, `equal_weight`); library
/// users can instead inject a rule object directly at run time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

/// Optional output series beyond the standard CSV set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Also write the daily Value/Growth composite scores per stock.
    pub emit_scores: bool,
    /// Also write per-stock solver diagnostics (iterations, residuals).
    pub emit_diagnostics: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            schema_version: SCHEMA_VERSION,
            run: RunConfig::default(),
            data: DataConfig { csv: None, synthetic: Some(SyntheticSpec::default()) },
            participants: ParticipantConfig::default(),
            retail: RetailConfig::default(),
            flows: FlowConfig::default(),
            cash: CashFlowConfig::default(),
            strategy: StrategyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl SimConfig {
    /// Parses and validates a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<SimConfig> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; a relative `data.csv` path is resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        let mut cfg = SimConfig::from_toml_str(&text)?;
        if let Some(csv) = &cfg.data.csv {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.data.csv = Some(dir.join(csv));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.run.t_max < 1 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        match (&self.data.csv, &self.data.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "data.csv and data.synthetic are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of data.csv or data.synthetic is required".into(),
                ))
            }
            _ => {}
        }
        if let Some(s) = &self.data.synthetic {
            if s.n_stocks < 1 {
                return Err(Error::Config("synthetic n_stocks must be at least 1".into()));
            }
            if s.n_quarters == Some(0) {
                return Err(Error::Config("synthetic n_quarters must be at least 1".into()));
            }
        }
        self.participants.validate()?;
        self.retail.validate()?;
        self.flows.validate()?;
        self.cash.validate()?;
        Ok(())
    }
}
