//! Performance-chasing investment flows, interest, dividends, and solvency.
//!
//! Funds live or die by relative performance: on a fixed schedule, external
//! investors move cash in or out of each fund in linear proportion to its
//! trailing excess return over the market-cap index. Between flow events,
//! cash earns (or pays, when borrowed) a constant daily rate, and stocks pay
//! their quarterly dividend on the day the corresponding report becomes
//! public. A participant whose marked wealth reaches zero is liquidated at
//! current prices and removed from the market.
//!
//! Everything here is a pure function of its arguments; the engine owns the
//! state and the event log.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Schedule and strength of performance-chasing flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Master switch; with flows off, fund NAV dynamics are exactly the
    /// no-flow model.
    pub enabled: bool,
    /// Baseline flow as a fraction of fund wealth, applied every flow day
    /// regardless of performance.
    pub intercept_a: f64,
    /// Flow fraction per unit of trailing excess return.
    pub slope_b: f64,
    /// Trailing days over which fund and index returns are measured.
    pub window: usize,
    /// Days between flow events (flows fire when `day % frequency == 0`).
    pub frequency: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { enabled: true, intercept_a: 0.0, slope_b: 0.1, window: 63, frequency: 21 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.intercept_a.is_finite() && self.slope_b.is_finite()) {
            return Err(Error::Config("flow coefficients must be finite".into()));
        }
        if self.window < 1 {
            return Err(Error::Config("flow window must be at least 1 day".into()));
        }
        if self.frequency < 1 {
            return Err(Error::Config("flow frequency must be at least 1 day".into()));
        }
        Ok(())
    }

    /// Whether flows fire on this day (given sufficient history).
    pub fn is_flow_day(&self, day: usize) -> bool {
        day % self.frequency == 0
    }
}

/// Interest terms for cash balances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CashFlowConfig {
    /// Constant per-day rate applied to cash. Negative balances pay the same
    /// rate, so leverage carries a cost.
    pub interest_rate: f64,
}

impl Default for CashFlowConfig {
    fn default() -> Self {
        CashFlowConfig { interest_rate: 1e-4 }
    }
}

impl CashFlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.interest_rate.is_finite() || self.interest_rate < 0.0 {
            return Err(Error::Config("interest_rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Simple return over the trailing `window` entries of a series, i.e.
/// `last / series[len - 1 - window] - 1`. `None` when the series is too
/// short or the base is not positive.
pub fn trailing_return(series: &[f64], window: usize) -> Option<f64> {
    if series.len() <= window {
        return None;
    }
    let last = *series.last().unwrap();
    let base = series[series.len() - 1 - window];
    if base <= 0.0 {
        return None;
    }
    Some(last / base - 1.0)
}

/// Outcome of one fund's flow event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowDecision {
    /// Cash moved: positive = inflow.
    Applied { amount: f64, excess_return: f64 },
    /// Either series was too short to measure the trailing window.
    InsufficientHistory,
}

/// Linear flow rule: `(a + b * x) * wealth` for excess return `x`.
pub fn flow_amount(excess_return: f64, wealth: f64, cfg: &FlowConfig) -> f64 {
    (cfg.intercept_a + cfg.slope_b * excess_return) * wealth
}

/// One fund's flow event: excess return is the fund's trailing unit-NAV
/// return minus the index's trailing return, both over `cfg.window` entries
/// of whatever history the caller supplies. The engine passes completed
/// daily closes, so the day's own provisional prices never feed its flow.
pub fn investment_flow(
    fund_nav: &[f64],
    index_level: &[f64],
    wealth: f64,
    cfg: &FlowConfig,
) -> FlowDecision {
    match (trailing_return(fund_nav, cfg.window), trailing_return(index_level, cfg.window)) {
        (Some(fund_r), Some(index_r)) => {
            let excess_return = fund_r - index_r;
            FlowDecision::Applied { amount: flow_amount(excess_return, wealth, cfg), excess_return }
        }
        _ => FlowDecision::InsufficientHistory,
    }
}

/// One day of interest on a cash balance, symmetric in sign.
pub fn accrue_interest(cash: f64, daily_rate: f64) -> f64 {
    cash * (1.0 + daily_rate)
}

/// Wealth marked to the given prices: `cash + sum(position * price)`.
pub fn mark_wealth(cash: f64, positions: &[f64], prices: &[f64]) -> f64 {
    debug_assert_eq!(positions.len(), prices.len());
    cash + positions.iter().zip(prices).map(|(s, p)| s * p).sum::<f64>()
}

/// Whether a participant with this marked wealth is insolvent.
pub fn is_insolvent(wealth: f64) -> bool {
    wealth <= 0.0
}

/// Sells every position at current prices into cash and zeroes the
/// holdings. Returns the sale proceeds. Because the proceeds are the same
/// sum that [`mark_wealth`] adds to cash, liquidation preserves wealth
/// exactly at the instant it happens.
pub fn liquidate(cash: &mut f64, positions: &mut [f64], prices: &[f64]) -> f64 {
    debug_assert_eq!(positions.len(), prices.len());
    let proceeds: f64 = positions.iter().zip(prices).map(|(s, p)| s * p).sum();
    *cash += proceeds;
    positions.iter_mut().for_each(|s| *s = 0.0);
    proceeds
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn trailing_return_needs_window_plus_one_points() {
        assert_eq!(trailing_return(&[1.0, 1.1], 1), Some(0.10000000000000009));
        assert_eq!(trailing_return(&[1.0, 1.1], 2), None);
        assert_eq!(trailing_return(&[], 1), None);
        let series = [1.0, 2.0, 3.0, 1.5];
        assert_relative_eq!(trailing_return(&series, 3).unwrap(), 0.5);
    }

    #[test]
    fn trailing_return_rejects_non_positive_bases() {
        assert_eq!(trailing_return(&[0.0, 1.0], 1), None);
        assert_eq!(trailing_return(&[-2.0, 1.0], 1), None);
    }

    #[test]
    fn zero_excess_and_zero_intercept_means_zero_flow() {
        let cfg = FlowConfig { intercept_a: 0.0, slope_b: 0.5, ..FlowConfig::default() };
        assert_eq!(flow_amount(0.0, 1000.0, &cfg), 0.0);
    }

    #[test]
    fn flow_is_linear_in_excess_return() {
        // 10% excess at slope 0.5 on 1000 of wealth: inflow of 50.
        let cfg = FlowConfig { intercept_a: 0.0, slope_b: 0.5, window: 1, ..FlowConfig::default() };
        let fund = [1.0, 1.2];
        let index = [1.0, 1.1];
        match investment_flow(&fund, &index, 1000.0, &cfg) {
            FlowDecision::Applied { amount, excess_return } => {
                assert_relative_eq!(excess_return, 0.1, epsilon = 1e-12);
                assert_relative_eq!(amount, 50.0, epsilon = 1e-9);
            }
            other => panic!("expected Applied, got {other:?}"),
        }
    }

    #[test]
    fn equal_nav_paths_receive_identical_flows() {
        let cfg = FlowConfig::default();
        let nav: Vec<f64> = (0..80).map(|d| 1.0 + 0.001 * d as f64).collect();
        let index: Vec<f64> = (0..80).map(|d| 100.0 * (1.0 + 0.0005 * d as f64)).collect();
        let a = investment_flow(&nav, &index, 500.0, &cfg);
        let b = investment_flow(&nav.clone(), &index, 500.0, &cfg);
        assert_eq!(a, b);
        assert!(matches!(a, FlowDecision::Applied { .. }));
    }

    #[test]
    fn short_history_skips_the_flow() {
        let cfg = FlowConfig::default(); // window 63
        let nav = vec![1.0; 63]; // one short of window + 1
        let index = vec![1.0; 200];
        assert_eq!(
            investment_flow(&nav, &index, 1000.0, &cfg),
            FlowDecision::InsufficientHistory
        );
    }

    #[test]
    fn underperformance_drains_cash() {
        let cfg = FlowConfig { intercept_a: 0.0, slope_b: 0.1, window: 1, frequency: 1, ..FlowConfig::default() };
        let fund = [1.0, 0.9];
        let index = [1.0, 1.0];
        match investment_flow(&fund, &index, 1000.0, &cfg) {
            FlowDecision::Applied { amount, .. } => assert!(amount < 0.0),
            other => panic!("expected Applied, got {other:?}"),
        }
    }

    #[test]
    fn flow_days_follow_the_frequency() {
        let cfg = FlowConfig { frequency: 21, ..FlowConfig::default() };
        assert!(cfg.is_flow_day(0));
        assert!(!cfg.is_flow_day(20));
        assert!(cfg.is_flow_day(21));
        assert!(cfg.is_flow_day(42));
    }

    #[test]
    fn interest_is_symmetric_in_sign() {
        assert_relative_eq!(accrue_interest(100.0, 1e-4), 100.01);
        assert_relative_eq!(accrue_interest(-100.0, 1e-4), -100.01);
        assert_eq!(accrue_interest(0.0, 1e-4), 0.0);
    }

    #[test]
    fn liquidation_preserves_wealth_at_the_boundary() {
        // Wealth -10 from 2 shares at 20 against -50 of cash: after the
        // fire sale, cash is exactly the old wealth.
        let mut cash = -50.0;
        let mut positions = vec![2.0];
        let prices = [20.0];
        let w_before = mark_wealth(cash, &positions, &prices);
        assert_relative_eq!(w_before, -10.0);
        assert!(is_insolvent(w_before));
        let proceeds = liquidate(&mut cash, &mut positions, &prices);
        assert_relative_eq!(proceeds, 40.0);
        assert_relative_eq!(cash, -10.0);
        assert_eq!(positions, vec![0.0]);
    }

    #[test]
    fn solvency_boundary_is_inclusive() {
        assert!(is_insolvent(0.0));
        assert!(is_insolvent(-1.0));
        assert!(!is_insolvent(100.0));
    }

    #[test]
    fn config_validation_rejects_degenerate_schedules() {
        assert!(FlowConfig { window: 0, ..FlowConfig::default() }.validate().is_err());
        assert!(FlowConfig { frequency: 0, ..FlowConfig::default() }.validate().is_err());
        assert!(FlowConfig { slope_b: f64::NAN, ..FlowConfig::default() }.validate().is_err());
        assert!(FlowConfig::default().validate().is_ok());
        assert!(CashFlowConfig { interest_rate: -0.01 }.validate().is_err());
        assert!(CashFlowConfig::default().validate().is_ok());
    }

    proptest! {
        /// Liquidation always turns wealth into pure cash of the same value.
        #[test]
        fn liquidation_identity(
            cash0 in -1e6f64..1e6,
            holdings in proptest::collection::vec((0.0f64..1e4, 0.1f64..1e3), 1..6),
        ) {
            let positions0: Vec<f64> = holdings.iter().map(|&(s, _)| s).collect();
            let prices: Vec<f64> = holdings.iter().map(|&(_, p)| p).collect();
            let w = mark_wealth(cash0, &positions0, &prices);
            let mut cash = cash0;
            let mut positions = positions0.clone();
            liquidate(&mut cash, &mut positions, &prices);
            prop_assert_eq!(cash, w); // identical accumulation order: exact
            prop_assert!(positions.iter().all(|&s| s == 0.0));
        }

        /// Flows scale linearly in wealth.
        #[test]
        fn flow_scales_with_wealth(
            x in -0.5f64..0.5,
            w in 1.0f64..1e9,
            b in 0.0f64..1.0,
        ) {
            let cfg = FlowConfig { intercept_a: 0.0, slope_b: b, ..FlowConfig::default() };
            let f1 = flow_amount(x, w, &cfg);
            let f2 = flow_amount(x, 2.0 * w, &cfg);
            prop_assert!((f2 - 2.0 * f1).abs() <= 1e-9 * f1.abs().max(1.0));
        }
    }
}
