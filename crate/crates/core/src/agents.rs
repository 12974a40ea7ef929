//! Market participants and their daily portfolio signals.
//!
//! A participant is a style plus a balance sheet (cash and share positions).
//! Each day the style turns public information into a signal vector
//! `phi` — the fraction of the participant's budget to allocate per stock,
//! with `phi >= 0` and `sum(phi) <= 1`; the remainder sits in cash.
//!
//! Styles:
//! * Value / Growth — equal weight `1/k` on the top-k stocks by the style
//!   score, ranking ties broken toward the lower stock index.
//! * Blend — `1/k` on the top-k/2 by Value and `1/k` on the top-k/2 by
//!   Growth; a stock in both halves carries `2/k`.
//! * Index — market-cap weights at the previous close.
//! * Retail — an aggregated noise trader: one latent Ornstein-Uhlenbeck level
//!   per stock, clamped at zero and normalized so equity weights always sum
//!   to the configured retail equity share `gamma`.
//! * Strategy — a user-programmed rule; its raw output is validated and
//!   coerced into a legal signal, never trusted.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::FundamentalsView;
use crate::error::{Error, Result};
use crate::scoring::Scores;

/// Indices of the top `k` entries by score, descending, ties broken toward
/// the lower index. Returns all indices when `k >= len`.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Equal weight `1/k` on the top-k stocks by score. When the universe has
/// fewer than `k` stocks every stock gets `1/k` and the rest stays in cash.
pub fn top_k_signal(scores: &[f64], k: usize) -> Vec<f64> {
    assert!(k > 0, "top-k signal needs k >= 1");
    let mut phi = vec![0.0; scores.len()];
    let w = 1.0 / k as f64;
    for i in top_k_indices(scores, k) {
        phi[i] = w;
    }
    phi
}

/// Blend signal: `1/k` on the top-k/2 by Value plus `1/k` on the top-k/2 by
/// Growth. `k` must be even so both halves are whole.
pub fn blend_signal(value: &[f64], growth: &[f64], k: usize) -> Vec<f64> {
    assert!(k >= 2 && k % 2 == 0, "blend needs an even k >= 2");
    assert_eq!(value.len(), growth.len());
    let mut phi = vec![0.0; value.len()];
    let w = 1.0 / k as f64;
    for i in top_k_indices(value, k / 2) {
        phi[i] += w;
    }
    for i in top_k_indices(growth, k / 2) {
        phi[i] += w;
    }
    phi
}

/// Market-cap weights at the given prices: `p*Q / sum(p*Q)`.
pub fn index_signal(prices: &[f64], supply: &[f64]) -> Vec<f64> {
    assert_eq!(prices.len(), supply.len());
    let total: f64 = prices.iter().zip(supply).map(|(p, q)| p * q).sum();
    debug_assert!(total > 0.0, "market capitalization must be positive");
    prices.iter().zip(supply).map(|(p, q)| p * q / total).collect()
}

/// Ornstein-Uhlenbeck process sampled at daily intervals (`dt = 1`), using
/// the exact transition
/// `X' = mu + (X - mu)*exp(-theta) + sigma*sqrt((1 - exp(-2*theta))/(2*theta))*eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrnsteinUhlenbeck {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl OrnsteinUhlenbeck {
    /// One exact daily transition given a standard normal draw `eps`.
    /// `theta = 0` degenerates to an arithmetic random walk.
    pub fn step(&self, x: f64, eps: f64) -> f64 {
        if self.theta == 0.0 {
            return x + self.sigma * eps;
        }
        let decay = (-self.theta).exp();
        let sd = self.sigma * ((1.0 - (-2.0 * self.theta).exp()) / (2.0 * self.theta)).sqrt();
        self.mu + (x - self.mu) * decay + sd * eps
    }
}

/// Retail-sector parameters: the latent process and the sector's overall
/// equity share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetailConfig {
    /// Mean-reversion speed of the latent levels (0 = random walk).
    pub theta: f64,
    /// Long-run mean each level reverts to.
    pub mu: f64,
    /// Diffusion of the latent levels (0 = frozen noise traders).
    pub sigma: f64,
    /// Fraction of retail wealth aimed at equities; signals sum to this.
    pub gamma: f64,
}

impl Default for RetailConfig {
    fn default() -> Self {
        RetailConfig { theta: 0.006, mu: 1.0, sigma: 0.07, gamma: 0.8 }
    }
}

impl RetailConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::Config("retail theta must be finite and >= 0".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config("retail sigma must be finite and >= 0".into()));
        }
        if !self.mu.is_finite() {
            return Err(Error::Config("retail mu must be finite".into()));
        }
        if !(self.gamma.is_finite() && (0.0..=1.0).contains(&self.gamma)) {
            return Err(Error::Config("retail gamma must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn process(&self) -> OrnsteinUhlenbeck {
        OrnsteinUhlenbeck { theta: self.theta, mu: self.mu, sigma: self.sigma }
    }
}

/// Latent state of the aggregated retail participant.
#[derive(Debug, Clone)]
pub struct RetailState {
    pub process: OrnsteinUhlenbeck,
    /// One latent level per stock; starts at `mu`.
    pub levels: Vec<f64>,
    /// Retail equity share: signals always sum to `gamma` (<= 1).
    pub gamma: f64,
    rng: ChaCha12Rng,
}

impl RetailState {
    /// Builds the retail state on its own ChaCha stream: the root seed with
    /// `set_stream(stream)`, so retail draws are independent of every other
    /// consumer of randomness in a run.
    pub fn new(process: OrnsteinUhlenbeck, gamma: f64, n_stocks: usize, seed: u64, stream: u64) -> Self {
        assert!((0.0..=1.0).contains(&gamma), "retail equity share in [0, 1]");
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let levels = vec![process.mu; n_stocks];
        Self { process, levels, gamma, rng }
    }

    /// Advances every latent level one day (one draw per stock, in stock
    /// order) and returns the day's signal.
    pub fn advance(&mut self) -> Vec<f64> {
        for x in self.levels.iter_mut() {
            let eps: f64 = StandardNormal.sample(&mut self.rng);
            *x = self.process.step(*x, eps);
        }
        retail_signal(&self.levels, self.gamma)
    }
}

/// Normalizes latent levels into a retail signal: negative levels clamp to
/// zero and the rest scale so the weights sum to `gamma`. If every level is
/// clamped the signal is uniform `gamma / n`.
pub fn retail_signal(levels: &[f64], gamma: f64) -> Vec<f64> {
    let clamped: Vec<f64> = levels.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 {
        clamped.iter().map(|x| gamma * x / total).collect()
    } else {
        vec![gamma / levels.len() as f64; levels.len()]
    }
}

/// Everything a strategy rule may look at when choosing weights: the day,
/// public fundamentals, both style scores, the previous close, and the
/// fund's own balance sheet.
pub struct StrategyContext<'a> {
    pub day: u32,
    pub view: &'a FundamentalsView<'a>,
    pub scores: &'a Scores,
    /// Previous close, one entry per stock; today's prices are not known yet.
    pub prices: &'a [f64],
    pub cash: f64,
    pub positions: &'a [f64],
}

/// A user-programmed trading rule. Must be deterministic for a run to be
/// reproducible. Returns raw weights, one per stock; the engine validates
/// them before they touch the market.
pub trait StrategyRule: Send {
    fn name(&self) -> &str;
    fn signal(&mut self, ctx: &StrategyContext<'_>) -> Vec<f64>;
}

/// Outcome of coercing a raw strategy output into a legal signal.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidatedSignal {
    /// Legal as produced (possibly after clamping fp dust above 1).
    Ok(Vec<f64>),
    /// Negative entries clamped and/or the sum rescaled to 1; the violation
    /// is reported so the engine can log it.
    Coerced { signal: Vec<f64>, detail: String },
    /// Non-finite entries or wrong length: the fund stands down into cash
    /// for the day (all-zero signal).
    Invalid { detail: String },
}

/// Fraction above 1.0 treated as accumulated rounding rather than a rule
/// violation; such sums are normalized without being reported.
const SIGNAL_SUM_GRACE: f64 = 1e-9;

/// Validates a raw strategy signal: wrong length or non-finite entries
/// invalidate the whole signal; negatives clamp to zero; a sum above 1
/// rescales to exactly 1.
pub fn validate_signal(raw: Vec<f64>, n_stocks: usize) -> ValidatedSignal {
    if raw.len() != n_stocks {
        return ValidatedSignal::Invalid {
            detail: format!("signal length {} != {} stocks", raw.len(), n_stocks),
        };
    }
    if let Some(bad) = raw.iter().find(|x| !x.is_finite()) {
        return ValidatedSignal::Invalid { detail: format!("non-finite weight {bad}") };
    }

    let mut signal = raw;
    let mut clamped = 0usize;
    for w in signal.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
            clamped += 1;
        }
    }
    let sum: f64 = signal.iter().sum();
    let rescaled = sum > 1.0;
    if rescaled {
        for w in signal.iter_mut() {
            *w /= sum;
        }
    }

    if clamped > 0 || sum > 1.0 + SIGNAL_SUM_GRACE {
        let mut parts = Vec::new();
        if clamped > 0 {
            parts.push(format!("{clamped} negative weight(s) clamped"));
        }
        if rescaled {
            parts.push(format!("sum {sum} rescaled to 1"));
        }
        ValidatedSignal::Coerced { signal, detail: parts.join("; ") }
    } else {
        ValidatedSignal::Ok(signal)
    }
}

// --- built-in strategy rules ---

/// Puts the whole budget on one stock, every day.
pub struct BuyAndHold {
    name: String,
    stock: usize,
    n_stocks: usize,
}

impl StrategyRule for BuyAndHold {
    fn name(&self) -> &str {
        &self.name
    }
    fn signal(&mut self, _ctx: &StrategyContext<'_>) -> Vec<f64> {
        let mut phi = vec![0.0; self.n_stocks];
        phi[self.stock] = 1.0;
        phi
    }
}

/// Runs the Value style with a configurable k.
pub struct TopValue {
    name: String,
    k: usize,
}

impl StrategyRule for TopValue {
    fn name(&self) -> &str {
        &self.name
    }
    fn signal(&mut self, ctx: &StrategyContext<'_>) -> Vec<f64> {
        top_k_signal(&ctx.scores.value, self.k)
    }
}

/// `1/n` in every stock.
pub struct EqualWeight {
    n_stocks: usize,
}

impl StrategyRule for EqualWeight {
    fn name(&self) -> &str {
        "equal_weight"
    }
    fn signal(&mut self, _ctx: &StrategyContext<'_>) -> Vec<f64> {
        vec![1.0 / self.n_stocks as f64; self.n_stocks]
    }
}

/// Names of the built-in rules, for error messages and docs.
pub const BUILTIN_STRATEGIES: &str = "buy_and_hold:<stock_id>, top_value:<k>, equal_weight";

/// Parses a built-in strategy spec: `buy_and_hold:<stock_id>`,
/// `top_value:<k>`, or `equal_weight`.
pub fn parse_builtin_strategy(
    spec: &str,
    stock_ids: &[String],
) -> crate::Result<Box<dyn StrategyRule>> {
    if spec == "equal_weight" {
        return Ok(Box::new(EqualWeight { n_stocks: stock_ids.len() }));
    }
    if let Some(id) = spec.strip_prefix("buy_and_hold:") {
        let stock = stock_ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| crate::Error::UnknownStockId { stock_id: id.to_string() })?;
        return Ok(Box::new(BuyAndHold {
            name: spec.to_string(),
            stock,
            n_stocks: stock_ids.len(),
        }));
    }
    if let Some(k) = spec.strip_prefix("top_value:") {
        let k: usize = k.parse().map_err(|_| crate::Error::UnknownStrategy {
            name: spec.to_string(),
            available: BUILTIN_STRATEGIES.to_string(),
        })?;
        if k == 0 {
            return Err(crate::Error::UnknownStrategy {
                name: spec.to_string(),
                available: BUILTIN_STRATEGIES.to_string(),
            });
        }
        return Ok(Box::new(TopValue { name: spec.to_string(), k }));
    }
    Err(crate::Error::UnknownStrategy {
        name: spec.to_string(),
        available: BUILTIN_STRATEGIES.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn top_k_ties_break_toward_lower_index() {
        // All equal: the first k stocks win.
        assert_eq!(top_k_signal(&[0.5; 5], 3), vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
        // Boundary tie between index 1 and 3: 1 wins.
        let phi = top_k_signal(&[0.9, 0.5, 0.1, 0.5], 2);
        assert_eq!(phi, vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn top_k_with_small_universe_leaves_cash() {
        let phi = top_k_signal(&[0.2, 0.8], 4);
        assert_eq!(phi, vec![0.25, 0.25]);
        assert!(phi.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn blend_overlap_carries_double_weight() {
        // Value picks {0, 1}; growth picks {1, 2}; k = 4.
        let value = [0.9, 0.8, 0.1];
        let growth = [0.1, 0.9, 0.8];
        let phi = blend_signal(&value, &growth, 4);
        assert_eq!(phi, vec![0.25, 0.5, 0.25]);
        assert_relative_eq!(phi.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn index_weights_are_cap_proportional() {
        let phi = index_signal(&[10.0, 20.0], &[100.0, 50.0]);
        assert_eq!(phi, vec![0.5, 0.5]);
        let phi = index_signal(&[10.0, 30.0], &[100.0, 100.0]);
        assert_relative_eq!(phi[0], 0.25);
        assert_relative_eq!(phi[1], 0.75);
    }

    #[test]
    fn ou_step_matches_the_exact_transition() {
        let ou = OrnsteinUhlenbeck { theta: 0.5, mu: 2.0, sigma: 0.3 };
        // Deterministic part: X' - mu = (X - mu) e^{-theta}.
        let x1 = ou.step(5.0, 0.0);
        assert_relative_eq!(x1 - 2.0, 3.0 * (-0.5f64).exp(), epsilon = 1e-15);
        // Shock scale: sigma * sqrt((1 - e^{-2 theta}) / (2 theta)).
        let x2 = ou.step(2.0, 1.0);
        let sd = 0.3 * ((1.0 - (-1.0f64).exp()) / 1.0).sqrt();
        assert_relative_eq!(x2 - 2.0, sd, epsilon = 1e-15);
    }

    #[test]
    fn ou_zero_theta_degenerates_to_random_walk() {
        let ou = OrnsteinUhlenbeck { theta: 0.0, mu: 7.0, sigma: 0.2 };
        assert_relative_eq!(ou.step(1.0, 1.5), 1.0 + 0.3);
    }

    #[test]
    fn ou_monte_carlo_matches_transition_moments() {
        // 200k one-step draws from a fixed start; sample mean and variance
        // must agree with the exact transition law within sampling error.
        use rand::SeedableRng;
        let ou = OrnsteinUhlenbeck { theta: 0.1, mu: 1.0, sigma: 0.5 };
        let x0 = 3.0;
        let n = 200_000;
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                ou.step(x0, eps)
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;

        let exact_mean = 1.0 + (x0 - 1.0) * (-0.1f64).exp();
        let exact_var = 0.25 * (1.0 - (-0.2f64).exp()) / 0.2;
        let se_mean = exact_var.sqrt() / (n as f64).sqrt();
        assert!((mean - exact_mean).abs() < 4.0 * se_mean, "mean {mean} vs {exact_mean}");
        assert!((var / exact_var - 1.0).abs() < 0.02, "var {var} vs {exact_var}");
    }

    #[test]
    fn retail_levels_converge_to_mu_without_noise() {
        let ou = OrnsteinUhlenbeck { theta: 0.2, mu: 1.0, sigma: 0.0 };
        let mut retail = RetailState::new(ou, 0.8, 3, 42, 1);
        retail.levels = vec![5.0, 1.0, 0.5];
        for _ in 0..400 {
            retail.advance();
        }
        for &x in &retail.levels {
            assert_relative_eq!(x, 1.0, epsilon = 1e-10);
        }
        // At the fixed point all levels are equal, so weights are uniform.
        let phi = retail.advance();
        for w in phi {
            assert_relative_eq!(w, 0.8 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn retail_signal_clamps_and_normalizes() {
        let phi = retail_signal(&[2.0, -1.0, 2.0], 0.5);
        assert_eq!(phi, vec![0.25, 0.0, 0.25]);
        // All clamped: uniform fallback.
        let phi = retail_signal(&[-1.0, -2.0], 0.6);
        assert_eq!(phi, vec![0.3, 0.3]);
    }

    #[test]
    fn retail_draws_are_reproducible_per_stream() {
        let ou = OrnsteinUhlenbeck { theta: 0.05, mu: 1.0, sigma: 0.1 };
        let mut a = RetailState::new(ou.clone(), 0.5, 4, 9, 1);
        let mut b = RetailState::new(ou.clone(), 0.5, 4, 9, 1);
        let mut c = RetailState::new(ou, 0.5, 4, 9, 2);
        for _ in 0..10 {
            let (sa, sb, sc) = (a.advance(), b.advance(), c.advance());
            assert_eq!(sa, sb);
            assert_ne!(sa, sc);
        }
    }

    #[test]
    fn oversubscribed_signal_rescales_to_one() {
        match validate_signal(vec![0.7, 0.7], 2) {
            ValidatedSignal::Coerced { signal, detail } => {
                assert_eq!(signal, vec![0.5, 0.5]);
                assert!(detail.contains("rescaled"));
            }
            other => panic!("expected Coerced, got {other:?}"),
        }
    }

    #[test]
    fn negative_weights_clamp_to_zero() {
        match validate_signal(vec![-0.5, 0.4], 2) {
            ValidatedSignal::Coerced { signal, detail } => {
                assert_eq!(signal, vec![0.0, 0.4]);
                assert!(detail.contains("clamped"));
            }
            other => panic!("expected Coerced, got {other:?}"),
        }
    }

    #[test]
    fn broken_signals_stand_down() {
        assert!(matches!(
            validate_signal(vec![f64::NAN, 0.1], 2),
            ValidatedSignal::Invalid { .. }
        ));
        assert!(matches!(
            validate_signal(vec![0.1], 2),
            ValidatedSignal::Invalid { .. }
        ));
    }

    #[test]
    fn legal_signals_pass_through_untouched() {
        match validate_signal(vec![0.25, 0.25], 2) {
            ValidatedSignal::Ok(signal) => assert_eq!(signal, vec![0.25, 0.25]),
            other => panic!("expected Ok, got {other:?}"),
        }
    }

    #[test]
    fn builtin_strategies_parse_and_reject() {
        let ids: Vec<String> = ["AAPL", "MSFT"].iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_builtin_strategy("equal_weight", &ids).unwrap().name(), "equal_weight");
        assert_eq!(
            parse_builtin_strategy("buy_and_hold:AAPL", &ids).unwrap().name(),
            "buy_and_hold:AAPL"
        );
        assert_eq!(parse_builtin_strategy("top_value:3", &ids).unwrap().name(), "top_value:3");
        assert!(matches!(
            parse_builtin_strategy("buy_and_hold:TSLA", &ids),
            Err(crate::Error::UnknownStockId { .. })
        ));
        assert!(matches!(
            parse_builtin_strategy("momentum", &ids),
            Err(crate::Error::UnknownStrategy { .. })
        ));
        assert!(matches!(
            parse_builtin_strategy("top_value:0", &ids),
            Err(crate::Error::UnknownStrategy { .. })
        ));
    }

    proptest! {
        /// Selection depends only on the ordering of scores.
        #[test]
        fn top_k_is_invariant_under_monotone_transforms(
            scores in proptest::collection::vec(-1e3f64..1e3, 1..12),
            k in 1usize..8,
        ) {
            let transformed: Vec<f64> = scores.iter().map(|x| (x / 2e3).tanh() * 10.0).collect();
            prop_assert_eq!(top_k_indices(&scores, k), top_k_indices(&transformed, k));
        }

        /// Every style signal is a legal allocation.
        #[test]
        fn signals_are_nonnegative_and_budget_bounded(
            scores in proptest::collection::vec(0.0f64..1.0, 2..10),
            k in 1usize..8,
            gamma in 0.0f64..1.0,
        ) {
            let n = scores.len();
            let phi = top_k_signal(&scores, k);
            prop_assert!(phi.iter().all(|&w| w >= 0.0));
            prop_assert!(phi.iter().sum::<f64>() <= 1.0 + 1e-12);

            let phi = retail_signal(&scores, gamma);
            prop_assert!(phi.iter().all(|&w| w >= 0.0));
            prop_assert!(phi.iter().sum::<f64>() <= gamma + 1e-12);

            let k_even = if k % 2 == 0 { k } else { k + 1 };
            let phi = blend_signal(&scores, &scores, k_even);
            prop_assert!(phi.iter().all(|&w| w >= 0.0));
            prop_assert!(phi.iter().sum::<f64>() <= 1.0 + 1e-12);

            let supply = vec![100.0; n];
            let prices: Vec<f64> = scores.iter().map(|s| s + 0.5).collect();
            let phi = index_signal(&prices, &supply);
            prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        /// Validation never returns an illegal signal.
        #[test]
        fn validated_signals_are_always_legal(
            raw in proptest::collection::vec(-2.0f64..3.0, 1..10),
        ) {
            let n = raw.len();
            let signal = match validate_signal(raw, n) {
                ValidatedSignal::Ok(s) | ValidatedSignal::Coerced { signal: s, .. } => s,
                ValidatedSignal::Invalid { .. } => return Ok(()),
            };
            prop_assert!(signal.iter().all(|&w| w >= 0.0));
            prop_assert!(signal.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }
}
